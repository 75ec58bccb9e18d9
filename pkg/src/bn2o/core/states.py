"""
Tables over explicit disease states.

A StateTable holds, for a list of states, the prior of each state, the
conditional probability of every finding given the state, and the read-out
vector a state contributes to the disease posteriors (its bit vector for a
real state, the alpha coefficients for an aggregate state). Brute-force
inference, the reduced models and the sweeps all evaluate evidence against
such tables.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Optional, Tuple

import numpy as np

from ..config import get_settings
from ..errors import ImpossibleEvidenceError, InfeasibleComputationError
from .network import Bn2oNetwork, Evidence, codes_to_bits

logger = logging.getLogger(__name__)

BLOCK_BITS = 16


def check_state_cap(n_diseases: int, cap: Optional[int] = None, what: str = "state enumeration") -> None:
    cap = get_settings().state_cap if cap is None else cap
    if n_diseases > cap:
        raise InfeasibleComputationError(
            f"{what} over 2^{n_diseases} states exceeds the cap of 2^{cap} (BN2O_STATE_CAP)"
        )


def state_priors(net: Bn2oNetwork, codes: np.ndarray) -> np.ndarray:
    """p(X_D^s) for each code, from independent disease priors."""
    bits = codes_to_bits(codes, net.n_diseases)
    out = np.ones(bits.shape[0])
    for j in range(net.n_diseases):
        out *= np.where(bits[:, j], net.priors[j], 1.0 - net.priors[j])
    return out


def state_conditionals(net: Bn2oNetwork, codes: np.ndarray) -> np.ndarray:
    """(N, n_findings) matrix of p(f_i | X_D^s), noisy-OR closed form."""
    bits = codes_to_bits(codes, net.n_diseases)
    no_fire = np.ones((bits.shape[0], net.n_findings))
    for j in range(net.n_diseases):
        no_fire[bits[:, j]] *= 1.0 - net.coeffs[:, j]
    return 1.0 - (1.0 - net.leaks)[None, :] * no_fire


def iter_code_blocks(n_diseases: int, block_bits: int = BLOCK_BITS) -> Iterator[np.ndarray]:
    total = 1 << n_diseases
    step = 1 << block_bits
    for start in range(0, total, step):
        yield np.arange(start, min(start + step, total), dtype=np.int64)


# ------------------------------------------------------------------
# StateTable
# ------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class StateTable:
    prior: np.ndarray      # (S,)
    cond: np.ndarray       # (S, n_findings)
    readout: np.ndarray    # (S, n_diseases)

    @classmethod
    def for_states(cls, net: Bn2oNetwork, codes: np.ndarray) -> "StateTable":
        codes = np.asarray(codes, dtype=np.int64)
        return cls(
            prior=state_priors(net, codes),
            cond=state_conditionals(net, codes),
            readout=codes_to_bits(codes, net.n_diseases).astype(np.float64),
        )

    @classmethod
    def full(cls, net: Bn2oNetwork, cap: Optional[int] = None) -> "StateTable":
        check_state_cap(net.n_diseases, cap)
        return cls.for_states(net, np.arange(1 << net.n_diseases, dtype=np.int64))

    @property
    def size(self) -> int:
        return int(self.prior.size)

    # --------------------------------------------------------------
    # single evidence set, direct products
    # --------------------------------------------------------------
    def weights(self, evidence: Evidence) -> np.ndarray:
        """Unnormalised p(s, E) for every row."""
        w = self.prior.copy()
        for i in evidence.sorted_positive():
            w *= self.cond[:, i]
        for i in evidence.sorted_negative():
            w *= 1.0 - self.cond[:, i]
        return w

    def accumulate(self, evidence: Evidence) -> Tuple[float, np.ndarray]:
        """(sum of weights, weighted read-out) for one evidence set."""
        w = self.weights(evidence)
        return float(w.sum()), w @ self.readout

    def log_weights(self, evidence: Evidence) -> np.ndarray:
        """log p(s, E) for every row, -inf where some factor is exactly zero."""
        with np.errstate(divide="ignore"):
            lw = np.log(self.prior)
            for i in evidence.sorted_positive():
                lw = lw + np.log(self.cond[:, i])
            for i in evidence.sorted_negative():
                lw = lw + np.log1p(-self.cond[:, i])
        return lw

    # --------------------------------------------------------------
    # batches of evidence sets, log space
    # --------------------------------------------------------------
    @cached_property
    def _log_terms(self):
        with np.errstate(divide="ignore"):
            log_prior = np.log(self.prior)
        log_c = np.log(np.where(self.cond > 0.0, self.cond, 1.0))
        log_1mc = np.log1p(-np.where(self.cond < 1.0, self.cond, 0.0))
        zero_c = (self.cond <= 0.0).astype(np.float64)
        one_c = (self.cond >= 1.0).astype(np.float64)
        has_zero = bool(zero_c.any() or one_c.any())
        return log_prior, log_c.T.copy(), log_1mc.T.copy(), zero_c.T.copy(), one_c.T.copy(), has_zero

    def batch(self, positive: np.ndarray, negative: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Evaluate a batch of evidence sets given as (B, n_findings) boolean masks.

        Returns:
            posteriors (B, n_diseases), evidence probabilities (B,), and a
            boolean (B,) mask that is False where the evidence is impossible
            under this table (those posterior rows are zero).
        """
        log_prior, log_c, log_1mc, zero_c, one_c, has_zero = self._log_terms
        pos = np.asarray(positive, dtype=np.float64)
        neg = np.asarray(negative, dtype=np.float64)

        log_w = log_prior[None, :] + pos @ log_c + neg @ log_1mc
        if has_zero:
            # a factor of exactly zero is tracked separately; 0 * log(0) must not reach the matmul
            dead = (pos @ zero_c + neg @ one_c) > 0.0
            log_w[dead] = -np.inf

        peak = log_w.max(axis=1)
        possible = np.isfinite(peak)
        shift = np.where(possible, peak, 0.0)
        w = np.exp(log_w - shift[:, None])
        total = w.sum(axis=1)
        safe_total = np.where(possible, total, 1.0)
        post = (w @ self.readout) / safe_total[:, None]
        post[~possible] = 0.0
        evidence_prob = np.where(possible, np.exp(shift) * total, 0.0)
        return post, evidence_prob, possible


def table_posteriors(table: StateTable, evidence: Evidence, what: str) -> Tuple[np.ndarray, float]:
    total, numer = table.accumulate(evidence)
    if not total > 0.0:
        raise ImpossibleEvidenceError(f"evidence {evidence} has probability 0 under the {what}")
    return numer / total, total
