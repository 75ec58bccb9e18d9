"""
Similarity of disease-cluster states.

Two states are similar when the ratio of their posterior probabilities does
not depend on the evidence. With findings conditionally independent given
the full disease state, that holds exactly when the two states have the same
column of finding conditionals, which is the cheap test used here.
likelihood_ratio_invariant checks the definition directly by enumerating
every instantiation of the findings and is meant for validation on small nets.
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from ..core.network import Bn2oNetwork, as_state, encode_state
from ..core.states import state_conditionals, state_priors
from ..errors import InfeasibleComputationError, InvalidInputError

logger = logging.getLogger(__name__)

DEFAULT_SIMILARITY_TOL = 1e-9
MAX_RATIO_FINDINGS = 14


def _columns(net: Bn2oNetwork, a, b):
    codes = np.array([encode_state(as_state(net, a)), encode_state(as_state(net, b))], dtype=np.int64)
    cond = state_conditionals(net, codes)
    return codes, cond[0], cond[1]


def column_distance(net: Bn2oNetwork, a, b) -> float:
    """max_j |p(f_j | a) - p(f_j | b)|."""
    _, col_a, col_b = _columns(net, a, b)
    return float(np.max(np.abs(col_a - col_b)))


def states_similar(net: Bn2oNetwork, a, b, tol: float = DEFAULT_SIMILARITY_TOL) -> bool:
    if tol < 0:
        raise InvalidInputError("tol must be non-negative")
    return column_distance(net, a, b) <= tol


def likelihood_ratio_invariant(
    net: Bn2oNetwork,
    a,
    b,
    tol: float = DEFAULT_SIMILARITY_TOL,
    max_findings: Optional[int] = None,
) -> bool:
    """
    True iff P(a|E)/P(b|E) stays within relative `tol` of p(a)/p(b) for every
    instantiation E of the findings (each finding unobserved, true or false).

    Instantiations where both states are impossible are skipped. Where exactly
    one of them is impossible the ratio is 0 or infinite, which counts as a
    violation.
    """
    if tol < 0:
        raise InvalidInputError("tol must be non-negative")
    limit = MAX_RATIO_FINDINGS if max_findings is None else max_findings
    if net.n_findings > limit:
        raise InfeasibleComputationError(
            f"enumerating 3^{net.n_findings} instantiations exceeds the limit of 3^{limit}"
        )
    codes, col_a, col_b = _columns(net, a, b)
    prior_a, prior_b = state_priors(net, codes)
    if prior_a <= 0.0 or prior_b <= 0.0:
        raise InvalidInputError("likelihood-ratio test needs states with non-zero prior probability")

    # likelihood of every instantiation, built finding by finding: unobserved, positive, negative
    like_a = np.ones(1)
    like_b = np.ones(1)
    for ca, cb in zip(col_a, col_b):
        like_a = np.concatenate([like_a, like_a * ca, like_a * (1.0 - ca)])
        like_b = np.concatenate([like_b, like_b * cb, like_b * (1.0 - cb)])

    alive_a = like_a > 0.0
    alive_b = like_b > 0.0
    if np.any(alive_a != alive_b):
        return False
    both = alive_a & alive_b
    ratio = like_a[both] / like_b[both]
    return bool(np.all(np.abs(ratio - 1.0) <= tol))
