"""
Core data types for two-layer noisy-OR (BN2O) networks.

- Bn2oNetwork: disease priors, finding leaks and the dense coefficient matrix
- Evidence:    disjoint sets of positive / negative findings
- Posteriors:  per-disease posteriors plus P(evidence)
- disease states as boolean vectors, with an integer encoding (bit j = disease j)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from ..errors import DimensionMismatchError, IndexOutOfRangeError, InvalidInputError


def _frozen_array(values, name: str, ndim: int) -> np.ndarray:
    try:
        arr = np.array(values, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise InvalidInputError(f"{name}: not a numeric array ({e})")
    if arr.ndim != ndim:
        raise DimensionMismatchError(f"{name}: expected {ndim}-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name}: contains non-finite values")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise InvalidInputError(f"{name}: probabilities must lie in [0, 1]")
    arr.setflags(write=False)
    return arr


# ------------------------------------------------------------------
# Network
# ------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Bn2oNetwork:
    """
    Fully parameterised BN2O network.

    Args:
        priors: p(d_j), length n_diseases.
        leaks:  Leak(f_i), length n_findings.
        coeffs: c_ij, shape (n_findings, n_diseases). A coefficient of
            exactly 0 means there is no edge.
        provenance: free-form metadata (generator config, seed) carried
            through serialisation.
    """

    priors: np.ndarray
    leaks: np.ndarray
    coeffs: np.ndarray
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        priors = _frozen_array(self.priors, "priors", 1)
        leaks = _frozen_array(self.leaks, "leaks", 1)
        coeffs = _frozen_array(self.coeffs, "coeffs", 2)
        if priors.size < 1 or leaks.size < 1:
            raise InvalidInputError("a network needs at least one disease and one finding")
        if coeffs.shape != (leaks.size, priors.size):
            raise DimensionMismatchError(
                f"coeffs has shape {coeffs.shape}, expected (n_findings, n_diseases) = "
                f"({leaks.size}, {priors.size})"
            )
        object.__setattr__(self, "priors", priors)
        object.__setattr__(self, "leaks", leaks)
        object.__setattr__(self, "coeffs", coeffs)

    @property
    def n_diseases(self) -> int:
        return int(self.priors.size)

    @property
    def n_findings(self) -> int:
        return int(self.leaks.size)

    def check_finding(self, finding: int) -> int:
        if not isinstance(finding, (int, np.integer)) or isinstance(finding, bool):
            raise InvalidInputError(f"finding index must be an integer, got {finding!r}")
        if not 0 <= finding < self.n_findings:
            raise IndexOutOfRangeError(f"finding {finding} out of range [0, {self.n_findings})")
        return int(finding)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "n_diseases": self.n_diseases,
            "n_findings": self.n_findings,
            "priors": self.priors.tolist(),
            "leaks": self.leaks.tolist(),
            "coeffs": self.coeffs.tolist(),
        }
        if self.provenance:
            data["provenance"] = self.provenance
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Bn2oNetwork":
        from .io import NetworkFile

        spec = NetworkFile.model_validate(data)
        return cls(priors=spec.priors, leaks=spec.leaks, coeffs=spec.coeffs, provenance=spec.provenance or {})


# ------------------------------------------------------------------
# Disease states
# ------------------------------------------------------------------
def as_state(net: Bn2oNetwork, state) -> np.ndarray:
    """Coerce a bool/0-1 sequence (or a bitstring) into a validated state vector."""
    if isinstance(state, str):
        state = parse_bitstring(state)
    bits = np.asarray(state)
    if bits.ndim != 1 or bits.size != net.n_diseases:
        raise DimensionMismatchError(
            f"state has length {bits.size}, network has {net.n_diseases} diseases"
        )
    if bits.dtype != np.bool_:
        if not np.all((bits == 0) | (bits == 1)):
            raise InvalidInputError("state entries must be 0/1 or booleans")
        bits = bits.astype(bool)
    return bits


def encode_state(bits: Sequence[bool]) -> int:
    """Integer code of a state: bit j set iff disease j is present."""
    code = 0
    for j, b in enumerate(bits):
        if b:
            code |= 1 << j
    return code


def decode_state(code: int, n_diseases: int) -> np.ndarray:
    if code < 0 or code >= 1 << n_diseases:
        raise IndexOutOfRangeError(f"state code {code} out of range for {n_diseases} diseases")
    return np.array([(code >> j) & 1 for j in range(n_diseases)], dtype=bool)


def codes_to_bits(codes: np.ndarray, n_diseases: int) -> np.ndarray:
    """(N,) integer codes -> (N, n_diseases) boolean matrix."""
    codes = np.asarray(codes, dtype=np.int64)
    shifts = np.arange(n_diseases, dtype=np.int64)
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(bool)


def parse_bitstring(text: str) -> np.ndarray:
    """'0101' -> [F, T, F, T]; disease 0 is the leftmost character."""
    text = text.strip()
    if not text or any(ch not in "01" for ch in text):
        raise InvalidInputError(f"state literal must be a non-empty bitstring, got {text!r}")
    return np.array([ch == "1" for ch in text], dtype=bool)


def format_bitstring(bits: Sequence[bool]) -> str:
    return "".join("1" if b else "0" for b in bits)


# ------------------------------------------------------------------
# Evidence
# ------------------------------------------------------------------
@dataclass(frozen=True)
class Evidence:
    positive: frozenset = frozenset()
    negative: frozenset = frozenset()

    def __post_init__(self):
        pos = frozenset(int(i) for i in self.positive)
        neg = frozenset(int(i) for i in self.negative)
        overlap = pos & neg
        if overlap:
            raise InvalidInputError(f"findings {sorted(overlap)} are both positive and negative")
        if any(i < 0 for i in pos | neg):
            raise IndexOutOfRangeError("finding indices must be non-negative")
        object.__setattr__(self, "positive", pos)
        object.__setattr__(self, "negative", neg)

    @classmethod
    def of(cls, positive: Iterable[int] = (), negative: Iterable[int] = ()) -> "Evidence":
        return cls(frozenset(positive), frozenset(negative))

    def validate_for(self, net: Bn2oNetwork) -> "Evidence":
        for i in self.positive | self.negative:
            if i >= net.n_findings:
                raise IndexOutOfRangeError(f"finding {i} out of range [0, {net.n_findings})")
        return self

    @property
    def is_empty(self) -> bool:
        return not self.positive and not self.negative

    def sorted_positive(self) -> List[int]:
        return sorted(self.positive)

    def sorted_negative(self) -> List[int]:
        return sorted(self.negative)

    def to_dict(self) -> Dict[str, List[int]]:
        return {"positive": self.sorted_positive(), "negative": self.sorted_negative()}

    def __str__(self) -> str:
        return f"+{self.sorted_positive()} -{self.sorted_negative()}"


# ------------------------------------------------------------------
# Posteriors
# ------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class Posteriors:
    per_disease: np.ndarray
    evidence_probability: float
    engine: Optional[str] = None

    def __post_init__(self):
        per = np.array(self.per_disease, dtype=np.float64)
        if not np.all(np.isfinite(per)):
            raise InvalidInputError("posteriors contain non-finite values")
        # rounding can push an exact 0 or 1 a few ulps outside the unit interval
        per = np.clip(per, 0.0, 1.0)
        per.setflags(write=False)
        object.__setattr__(self, "per_disease", per)
        object.__setattr__(self, "evidence_probability", float(min(max(self.evidence_probability, 0.0), 1.0)))

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "posteriors": self.per_disease.tolist(),
            "evidence_probability": self.evidence_probability,
        }
        if self.engine:
            data["engine"] = self.engine
        return data
