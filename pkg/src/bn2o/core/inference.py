"""
Exact posterior computation for BN2O networks.

Three engines:
- brute:      sum the joint over all 2^n1 disease states (oracle)
- negative:   closed form for purely negative evidence, linear in the network size
- quickscore: signed sum over subsets of the positive findings
              (exponential only in the number of positive findings)
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Dict, Iterable, Optional, Tuple, Union

import numpy as np

from ..config import get_settings
from ..errors import ImpossibleEvidenceError, InfeasibleComputationError, InvalidInputError
from .network import Bn2oNetwork, Evidence, Posteriors, as_state
from .states import StateTable, check_state_cap, iter_code_blocks

logger = logging.getLogger(__name__)

# P(E) at or below this is treated as impossible evidence by quickscore
IMPOSSIBLE_TOL = 1e-12
# positives enumerated in one vectorised table; the rest are walked row by row
INNER_POSITIVE_BITS = 16


# ------------------------------------------------------------------
# Building blocks
# ------------------------------------------------------------------
def finding_conditional(net: Bn2oNetwork, finding: int, state) -> float:
    """p(f_i | state) = 1 - (1 - Leak_i) * prod_j (1 - c_ij x_j)."""
    i = net.check_finding(finding)
    bits = as_state(net, state)
    no_fire = np.prod(np.where(bits, 1.0 - net.coeffs[i], 1.0))
    return float(1.0 - (1.0 - net.leaks[i]) * no_fire)


def finding_marginals(net: Bn2oNetwork) -> np.ndarray:
    """p(f_i) for every finding, each in O(n_diseases)."""
    q = 1.0 - net.priors
    factors = q[None, :] + net.priors[None, :] * (1.0 - net.coeffs)
    return 1.0 - (1.0 - net.leaks) * np.prod(factors, axis=1)


def prior_finding_marginal(net: Bn2oNetwork, finding: int) -> float:
    i = net.check_finding(finding)
    factors = (1.0 - net.priors) + net.priors * (1.0 - net.coeffs[i])
    return float(1.0 - (1.0 - net.leaks[i]) * np.prod(factors))


def joint_probability(net: Bn2oNetwork, state, evidence: Evidence) -> float:
    bits = as_state(net, state)
    evidence.validate_for(net)
    p = float(np.prod(np.where(bits, net.priors, 1.0 - net.priors)))
    for i in evidence.sorted_positive():
        p *= finding_conditional(net, i, bits)
    for i in evidence.sorted_negative():
        p *= 1.0 - finding_conditional(net, i, bits)
    return p


# ------------------------------------------------------------------
# Brute force
# ------------------------------------------------------------------
def brute_force_posteriors(net: Bn2oNetwork, evidence: Evidence, cap: Optional[int] = None) -> Posteriors:
    """
    Exact posteriors by summing p(s, E) over all 2^n_diseases states.

    Weights are kept in log space and each block of states is rescaled by its
    largest weight, so posteriors stay finite when P(E) itself is below the
    smallest double; the reported evidence probability is then 0.

    Args:
        net: the network
        evidence: positive and negative findings
        cap: largest n_diseases to enumerate (BN2O_STATE_CAP when None)

    Returns:
        Posteriors tagged with engine "brute"
    """
    evidence.validate_for(net)
    check_state_cap(net.n_diseases, cap, "brute-force inference")

    peaks, totals, numers = [], [], []
    for codes in iter_code_blocks(net.n_diseases):
        table = StateTable.for_states(net, codes)
        log_w = table.log_weights(evidence)
        peak = float(log_w.max())
        if not np.isfinite(peak):
            continue
        w = np.exp(log_w - peak)
        peaks.append(peak)
        totals.append(float(w.sum()))
        numers.append(w @ table.readout)

    if not peaks:
        raise ImpossibleEvidenceError(f"evidence {evidence} has probability 0")
    top = max(peaks)
    scale = np.exp(np.array(peaks) - top)
    total = math.fsum(scale * np.array(totals))
    numer = np.sum(scale[:, None] * np.array(numers), axis=0)
    return Posteriors(numer / total, math.exp(top) * total, engine="brute")


# ------------------------------------------------------------------
# Negative evidence
# ------------------------------------------------------------------
def negative_evidence_posteriors(net: Bn2oNetwork, negative: Union[Evidence, Iterable[int]]) -> Posteriors:
    """
    Closed-form posteriors when every observed finding is negative.

    Args:
        net: the network
        negative: Evidence without positives, or the negative finding indices

    Returns:
        Posteriors tagged with engine "negative"
    """
    if isinstance(negative, Evidence):
        if negative.positive:
            raise InvalidInputError("negative-evidence engine cannot take positive findings")
        negative = negative.negative
    idx = np.array(sorted(net.check_finding(int(i)) for i in set(negative)), dtype=np.intp)

    survive = np.prod(1.0 - net.coeffs[idx, :], axis=0)           # prod_i (1 - c_ik)
    present = survive * net.priors
    denom = (1.0 - net.priors) + present
    evidence_prob = float(np.prod(1.0 - net.leaks[idx]) * np.prod(denom))
    if not evidence_prob > 0.0:
        raise ImpossibleEvidenceError(f"negative findings {idx.tolist()} have probability 0")
    return Posteriors(present / denom, evidence_prob, engine="negative")


# ------------------------------------------------------------------
# Quickscore
# ------------------------------------------------------------------
def _gray_subset_table(net: Bn2oNetwork, findings) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Per-subset products over `findings`, rows in reflected Gray-code order.

    Returns (survive (R, n1), leak_survive (R,), sign (R,)) where row r covers
    subset gray(r): survive = prod_{i in S}(1 - c_ik), sign = (-1)^|S|.
    """
    survive = np.ones((1, net.n_diseases))
    leak = np.ones(1)
    sign = np.ones(1)
    for i in findings:
        survive = np.vstack([survive, survive[::-1] * (1.0 - net.coeffs[i])[None, :]])
        leak = np.concatenate([leak, leak[::-1] * (1.0 - net.leaks[i])])
        sign = np.concatenate([sign, -sign[::-1]])
    return survive, leak, sign


def _product_excluding(f: np.ndarray) -> np.ndarray:
    """out[r, k] = prod_{j != k} f[r, j]."""
    rows, n = f.shape
    prefix = np.ones((rows, n))
    suffix = np.ones((rows, n))
    if n > 1:
        prefix[:, 1:] = np.cumprod(f[:, :-1], axis=1)
        suffix[:, :-1] = np.cumprod(f[:, :0:-1], axis=1)[:, ::-1]
    return prefix * suffix


def quickscore_posteriors(net: Bn2oNetwork, evidence: Evidence, cap: Optional[int] = None) -> Posteriors:
    """
    Exact posteriors by inclusion-exclusion over the positive findings.

    Terms are generated in Gray-code order of the positive subset and summed
    with math.fsum. Cancellation between large terms of opposite sign can
    still lose digits when the number of positives approaches the cap; P(E)
    at or below 1e-12 is reported as impossible evidence.
    """
    evidence.validate_for(net)
    cap = get_settings().positive_cap if cap is None else cap
    positive = evidence.sorted_positive()
    negative = np.array(evidence.sorted_negative(), dtype=np.intp)
    if len(positive) > cap:
        raise InfeasibleComputationError(
            f"quickscore over {len(positive)} positive findings exceeds the cap of {cap} (BN2O_POSITIVE_CAP)"
        )

    p = net.priors
    q = 1.0 - p
    base_survive = np.prod(1.0 - net.coeffs[negative, :], axis=0)
    base_leak = float(np.prod(1.0 - net.leaks[negative]))

    inner, outer = positive[:INNER_POSITIVE_BITS], positive[INNER_POSITIVE_BITS:]
    in_survive, in_leak, in_sign = _gray_subset_table(net, inner)
    out_survive, out_leak, out_sign = _gray_subset_table(net, outer)

    term_sums = []
    numer_sums = []
    for r in range(out_sign.size):
        survive = in_survive * (base_survive * out_survive[r])[None, :]
        coef = in_sign * out_sign[r] * in_leak * (base_leak * out_leak[r])
        factors = q[None, :] + p[None, :] * survive
        excluding = _product_excluding(factors)
        term_sums.append(math.fsum(coef * factors[:, 0] * excluding[:, 0]))
        numer = (coef[:, None] * p[None, :]) * survive * excluding
        numer_sums.append([math.fsum(numer[:, k]) for k in range(net.n_diseases)])

    evidence_prob = math.fsum(term_sums)
    if evidence_prob <= IMPOSSIBLE_TOL:
        raise ImpossibleEvidenceError(
            f"evidence {evidence} has probability {evidence_prob:.3e} (<= {IMPOSSIBLE_TOL:g})"
        )
    per_disease = np.array([math.fsum(col) for col in zip(*numer_sums)]) / evidence_prob
    return Posteriors(per_disease, evidence_prob, engine="quickscore")


# ------------------------------------------------------------------
# Engine registry
# ------------------------------------------------------------------
EXACT_ENGINES: Dict[str, Callable[[Bn2oNetwork, Evidence], Posteriors]] = {
    "brute": brute_force_posteriors,
    "quickscore": quickscore_posteriors,
    "negative": negative_evidence_posteriors,
}


def exact_posteriors(net: Bn2oNetwork, evidence: Evidence, engine: str = "quickscore") -> Posteriors:
    try:
        fn = EXACT_ENGINES[engine]
    except KeyError:
        raise InvalidInputError(f"unknown exact engine '{engine}' (expected one of {sorted(EXACT_ENGINES)})")
    return fn(net, evidence)
