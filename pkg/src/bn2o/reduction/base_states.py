"""
Base-state selection.

The 2^n1 states of the disease cluster are split into base states S_b (kept
exactly) and similar states S_sigma (merged into one aggregate state).

Policies:
- dmax:     base iff at most d_max diseases are present
- lambda:   base iff some finding has p(f_j | s) < lambda, i.e. a state is
            similar only when it drives every finding to at least lambda
- explicit: a given list of states
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Annotated, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator

from ..config import get_settings
from ..core.network import Bn2oNetwork, codes_to_bits, parse_bitstring, encode_state
from ..core.states import check_state_cap, iter_code_blocks, state_conditionals, state_priors
from ..errors import InfeasibleComputationError, InvalidInputError

logger = logging.getLogger(__name__)

MASS_TOL = 1e-12


# ------------------------------------------------------------------
# Policies
# ------------------------------------------------------------------
class DMaxPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["dmax"] = "dmax"
    d_max: int = Field(ge=0)

    @property
    def param(self) -> float:
        return float(self.d_max)

    @property
    def descriptor(self) -> str:
        return f"dmax:{self.d_max}"


class LambdaPolicy(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["lambda"] = "lambda"
    threshold: float = Field(gt=0.0, lt=1.0)

    @property
    def param(self) -> float:
        return self.threshold

    @property
    def descriptor(self) -> str:
        return f"lambda:{self.threshold:g}"


class ExplicitPolicy(BaseModel):
    """States given as integer codes or bitstrings (disease 0 leftmost)."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["explicit"] = "explicit"
    states: Tuple[int, ...]
    n_bits: Optional[int] = None

    @model_validator(mode="before")
    @classmethod
    def _from_bitstrings(cls, data):
        if isinstance(data, dict) and any(isinstance(s, str) for s in data.get("states", ())):
            widths = {len(s) for s in data["states"] if isinstance(s, str)}
            if len(widths) != 1:
                raise ValueError("bitstring states must all have the same length")
            codes = [encode_state(parse_bitstring(s)) if isinstance(s, str) else int(s) for s in data["states"]]
            data = {**data, "states": tuple(codes), "n_bits": widths.pop()}
        return data

    @field_validator("states")
    @classmethod
    def _distinct(cls, v: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(c < 0 for c in v):
            raise ValueError("state codes must be non-negative")
        if len(set(v)) != len(v):
            raise ValueError("explicit states must be distinct")
        return v

    @property
    def param(self) -> float:
        return float(len(self.states))

    @property
    def descriptor(self) -> str:
        return f"explicit:{len(self.states)}"


SelectionPolicy = Annotated[Union[DMaxPolicy, LambdaPolicy, ExplicitPolicy], Field(discriminator="kind")]
_POLICY_ADAPTER = TypeAdapter(SelectionPolicy)


def policy_from_dict(data) -> Union[DMaxPolicy, LambdaPolicy, ExplicitPolicy]:
    try:
        return _POLICY_ADAPTER.validate_python(data)
    except ValidationError as e:
        raise InvalidInputError(f"invalid selection policy {data!r}\n{e}")


def parse_policy(text: str) -> Union[DMaxPolicy, LambdaPolicy, ExplicitPolicy]:
    """Parse 'dmax:K', 'lambda:X' or 'explicit:FILE' (FILE holds a JSON list of states)."""
    kind, sep, arg = text.partition(":")
    if not sep or not arg:
        raise InvalidInputError(f"policy must look like dmax:K, lambda:X or explicit:FILE, got {text!r}")
    kind = kind.strip().lower()
    try:
        if kind == "dmax":
            return policy_from_dict({"kind": "dmax", "d_max": int(arg)})
        if kind == "lambda":
            return policy_from_dict({"kind": "lambda", "threshold": float(arg)})
    except ValueError:
        raise InvalidInputError(f"bad policy parameter in {text!r}")
    if kind == "explicit":
        path = Path(arg)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise InvalidInputError(f"{path}: cannot read explicit state list ({e})")
        if isinstance(data, dict):
            data = data.get("states", [])
        return policy_from_dict({"kind": "explicit", "states": data})
    raise InvalidInputError(f"unknown policy kind '{kind}'")


# ------------------------------------------------------------------
# BaseStateSet
# ------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class BaseStateSet:
    codes: np.ndarray                   # ascending integer encodings
    policy: Union[DMaxPolicy, LambdaPolicy, ExplicitPolicy]
    n_diseases: int
    base_prior_mass: float
    per_disease_base_mass: np.ndarray

    @property
    def n_base(self) -> int:
        return int(self.codes.size)

    @property
    def n_similar(self) -> int:
        return (1 << self.n_diseases) - self.n_base

    @property
    def fraction(self) -> float:
        return self.n_base / float(1 << self.n_diseases)

    @property
    def is_complete(self) -> bool:
        return self.n_similar == 0

    @property
    def states(self) -> np.ndarray:
        return codes_to_bits(self.codes, self.n_diseases)


def _popcount_polynomial(absent: np.ndarray, present: np.ndarray) -> np.ndarray:
    """poly[k] = sum over states with k diseases present of prod(weights)."""
    poly = np.ones(1)
    for a, b in zip(absent, present):
        nxt = np.zeros(poly.size + 1)
        nxt[:-1] += poly * a
        nxt[1:] += poly * b
        poly = nxt
    return poly


def dmax_prior_masses(net: Bn2oNetwork, d_max: int) -> Tuple[float, np.ndarray]:
    """
    Base-state masses for the dmax policy without enumerating states.

    Returns (sum of p(s) over popcount <= d_max, per-disease sums of p(s) x_i),
    in O(n1^2 d_max) from the independence of the disease priors.
    """
    if not 0 <= d_max <= net.n_diseases:
        raise InvalidInputError(f"d_max={d_max} outside [0, {net.n_diseases}]")
    p, q = net.priors, 1.0 - net.priors
    base = math.fsum(_popcount_polynomial(q, p)[: d_max + 1])
    per = np.zeros(net.n_diseases)
    if d_max >= 1:
        for i in range(net.n_diseases):
            others = np.arange(net.n_diseases) != i
            per[i] = p[i] * math.fsum(_popcount_polynomial(q[others], p[others])[:d_max])
    return base, per


def base_state_count(n1: int, d_max: int) -> int:
    """N_b = sum_{i <= d_max} C(n1, i)."""
    if n1 < 0 or not 0 <= d_max <= n1:
        raise InvalidInputError(f"need 0 <= d_max <= n1, got n1={n1}, d_max={d_max}")
    total = sum(math.comb(n1, i) for i in range(d_max + 1))
    if total >= 1 << 63:
        raise InfeasibleComputationError(f"base-state count for n1={n1}, d_max={d_max} overflows 64 bits")
    return total


def _dmax_codes(n1: int, d_max: int) -> np.ndarray:
    codes = [sum(1 << j for j in combo) for k in range(d_max + 1) for combo in combinations(range(n1), k)]
    return np.array(sorted(codes), dtype=np.int64)


def _lambda_codes(net: Bn2oNetwork, threshold: float, cap: Optional[int]) -> np.ndarray:
    check_state_cap(net.n_diseases, cap, "lambda base-state selection")
    selected = []
    for codes in iter_code_blocks(net.n_diseases):
        cond = state_conditionals(net, codes)
        selected.append(codes[cond.min(axis=1) < threshold])
    return np.concatenate(selected)


def base_set_from_codes(net: Bn2oNetwork, codes: np.ndarray, policy) -> BaseStateSet:
    codes = np.unique(np.asarray(codes, dtype=np.int64))
    priors = state_priors(net, codes)
    per_disease = priors @ codes_to_bits(codes, net.n_diseases).astype(np.float64)
    base_mass = math.fsum(priors)
    if np.any(per_disease > np.minimum(base_mass, net.priors) + MASS_TOL):
        raise InvalidInputError("per-disease base mass exceeds its bound")
    return BaseStateSet(
        codes=codes,
        policy=policy,
        n_diseases=net.n_diseases,
        base_prior_mass=min(base_mass, 1.0),
        per_disease_base_mass=per_disease,
    )


def select_base_states(net: Bn2oNetwork, policy, cap: Optional[int] = None) -> BaseStateSet:
    """
    Pick the states kept explicitly in the reduced model.

    Args:
        net: the network
        policy: DMaxPolicy, LambdaPolicy or ExplicitPolicy
        cap: state-enumeration cap as a power of two (BN2O_STATE_CAP when None)

    Returns:
        BaseStateSet with sorted codes and their prior masses
    """
    n1 = net.n_diseases
    if isinstance(policy, DMaxPolicy):
        if policy.d_max > n1:
            raise InvalidInputError(f"d_max={policy.d_max} exceeds n_diseases={n1}")
        cap = get_settings().state_cap if cap is None else cap
        if base_state_count(n1, policy.d_max) > 1 << cap:
            raise InfeasibleComputationError(f"{policy.descriptor} selects more than 2^{cap} base states")
        codes = _dmax_codes(n1, policy.d_max)
    elif isinstance(policy, LambdaPolicy):
        codes = _lambda_codes(net, policy.threshold, cap)
    elif isinstance(policy, ExplicitPolicy):
        if policy.n_bits is not None and policy.n_bits != n1:
            raise InvalidInputError(f"explicit states have {policy.n_bits} bits, network has {n1} diseases")
        if any(c >= 1 << n1 for c in policy.states):
            raise InvalidInputError(f"explicit state code out of range for {n1} diseases")
        codes = np.array(policy.states, dtype=np.int64)
    else:
        raise InvalidInputError(f"unsupported policy {policy!r}")

    if codes.size == 0:
        raise InvalidInputError(f"policy {policy.descriptor} selects no base states")

    base = base_set_from_codes(net, codes, policy)
    logger.info(
        "%s: N_b=%d of 2^%d (%.2f%%), base prior mass %.6g",
        policy.descriptor, base.n_base, n1, 100.0 * base.fraction, base.base_prior_mass,
    )
    return base
