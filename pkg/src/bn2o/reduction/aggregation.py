"""
Reduced model with one aggregate state.

All similar states are merged into a single state sigma whose prior is their
combined prior mass. Its finding conditionals are chosen so that the reduced
model keeps every prior finding marginal, and alpha(d_i) = p(d_i | sigma)
keeps every disease prior. The reduced model is read as a naive-Bayes
classifier over N_b + 1 states: findings are independent given the state,
including sigma.

The abstraction baseline uses the same base states and simply drops sigma.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from ..config import get_settings
from ..core.inference import finding_marginals
from ..core.io import NetworkFile, PathLike, dumps, read_json, write_atomic
from ..core.network import Bn2oNetwork, Evidence, Posteriors, codes_to_bits
from ..core.states import StateTable, check_state_cap, iter_code_blocks, state_conditionals, state_priors, table_posteriors
from ..errors import InconsistentBaseStateError, InvalidInputError
from .base_states import (
    BaseStateSet,
    DMaxPolicy,
    _popcount_polynomial,
    base_state_count,
    base_set_from_codes,
    policy_from_dict,
)

logger = logging.getLogger(__name__)

DEGENERATE_MASS = 1e-15
CLAMP_BAND = 1e-12
MODEL_KIND = "bn2o-aggregated-model"


@dataclass(frozen=True, eq=False)
class AggregatedModel:
    source: Bn2oNetwork
    base: BaseStateSet
    base_priors: np.ndarray             # (N_b,)
    base_conditionals: np.ndarray       # (N_b, n_findings)
    aggregate_prior: float
    aggregate_conditionals: np.ndarray  # (n_findings,)
    alpha: np.ndarray                   # (n_diseases,)
    degenerate: bool

    @property
    def n_base(self) -> int:
        return self.base.n_base

    @cached_property
    def _base_table(self) -> StateTable:
        return StateTable(
            prior=self.base_priors,
            cond=self.base_conditionals,
            readout=codes_to_bits(self.base.codes, self.source.n_diseases).astype(np.float64),
        )

    @cached_property
    def _aggregate_table(self) -> StateTable:
        base = self._base_table
        if self.degenerate:
            return base
        return StateTable(
            prior=np.append(base.prior, self.aggregate_prior),
            cond=np.vstack([base.cond, self.aggregate_conditionals[None, :]]),
            readout=np.vstack([base.readout, self.alpha[None, :]]),
        )

    def table(self, include_aggregate: bool = True) -> StateTable:
        return self._aggregate_table if include_aggregate else self._base_table


# ------------------------------------------------------------------
# Similar-state sums
# ------------------------------------------------------------------
def _similar_sums(net: Bn2oNetwork, base: BaseStateSet) -> Tuple[float, np.ndarray, np.ndarray]:
    """
    (sum p(s), sum p(s) x_i, sum p(s) p(f_j|s)) over the similar states.

    Summed on the similar side directly so that a small aggregate mass is not
    the difference of two numbers close to one:
    - dmax: popcount polynomials, no enumeration
    - otherwise, when the state space fits the cap: enumerate the complement
    - otherwise: subtract the base sums from the full marginals
    """
    p, q = net.priors, 1.0 - net.priors
    n1 = net.n_diseases

    policy = base.policy
    if isinstance(policy, DMaxPolicy) and base.n_base == base_state_count(n1, policy.d_max):
        d = policy.d_max
        mass = math.fsum(_popcount_polynomial(q, p)[d + 1:])
        per_disease = np.zeros(n1)
        for i in range(n1):
            others = np.arange(n1) != i
            per_disease[i] = p[i] * math.fsum(_popcount_polynomial(q[others], p[others])[d:])
        per_finding = np.zeros(net.n_findings)
        for j in range(net.n_findings):
            silent = math.fsum(_popcount_polynomial(q, p * (1.0 - net.coeffs[j]))[d + 1:])
            per_finding[j] = mass - (1.0 - net.leaks[j]) * silent
        return mass, per_disease, per_finding

    if n1 <= get_settings().state_cap:
        masses, per_disease, per_finding = [], np.zeros(n1), np.zeros(net.n_findings)
        for codes in iter_code_blocks(n1):
            similar = codes[~np.isin(codes, base.codes, assume_unique=True)]
            if similar.size == 0:
                continue
            priors = state_priors(net, similar)
            masses.append(math.fsum(priors))
            per_disease += priors @ codes_to_bits(similar, n1).astype(np.float64)
            per_finding += priors @ state_conditionals(net, similar)
        return math.fsum(masses), per_disease, per_finding

    base_priors = state_priors(net, base.codes)
    covered = base_priors @ state_conditionals(net, base.codes)
    return (
        1.0 - base.base_prior_mass,
        net.priors - base.per_disease_base_mass,
        finding_marginals(net) - covered,
    )


def _clamp(values: np.ndarray, name: str) -> np.ndarray:
    if np.any(values < -CLAMP_BAND) or np.any(values > 1.0 + CLAMP_BAND):
        bad = values[(values < -CLAMP_BAND) | (values > 1.0 + CLAMP_BAND)]
        raise InconsistentBaseStateError(f"{name} outside [0, 1]: {bad[:5].tolist()}")
    return np.clip(values, 0.0, 1.0)


# ------------------------------------------------------------------
# Construction
# ------------------------------------------------------------------
def build_aggregated_model(net: Bn2oNetwork, base: BaseStateSet) -> AggregatedModel:
    """
    Merge every state outside the base set into one aggregate state.

    Args:
        net: the network
        base: base states from select_base_states

    Returns:
        AggregatedModel; its aggregate is flagged degenerate when the merged
        prior mass is at most 1e-15

    Raises:
        InconsistentBaseStateError: alpha or an aggregate conditional falls
            outside [0, 1] by more than 1e-12
    """
    if base.n_diseases != net.n_diseases:
        raise InvalidInputError(
            f"base-state set is for {base.n_diseases} diseases, network has {net.n_diseases}"
        )
    base_priors = state_priors(net, base.codes)
    base_cond = state_conditionals(net, base.codes)

    if base.is_complete:
        mass, per_disease, per_finding = 0.0, np.zeros(net.n_diseases), np.zeros(net.n_findings)
    else:
        mass, per_disease, per_finding = _similar_sums(net, base)

    degenerate = mass <= DEGENERATE_MASS
    if degenerate:
        alpha = np.zeros(net.n_diseases)
        agg_cond = np.zeros(net.n_findings)
        mass = max(mass, 0.0)
    else:
        alpha = _clamp(per_disease / mass, "alpha")
        agg_cond = _clamp(per_finding / mass, "aggregate conditionals")

    for arr in (base_priors, base_cond, alpha, agg_cond):
        arr.setflags(write=False)
    logger.debug(
        "%s: aggregate prior %.6g%s", base.policy.descriptor, mass, " (degenerate)" if degenerate else ""
    )
    return AggregatedModel(
        source=net,
        base=base,
        base_priors=base_priors,
        base_conditionals=base_cond,
        aggregate_prior=float(mass),
        aggregate_conditionals=agg_cond,
        alpha=alpha,
        degenerate=degenerate,
    )


# ------------------------------------------------------------------
# Inference
# ------------------------------------------------------------------
def aggregated_posteriors(model: AggregatedModel, evidence: Evidence) -> Posteriors:
    """
    Args:
        model: reduced model from build_aggregated_model
        evidence: positive and negative findings

    Returns:
        Posteriors over the base states plus the aggregate state (engine "aggregate")
    """
    evidence.validate_for(model.source)
    per_disease, evidence_prob = table_posteriors(model.table(True), evidence, "reduced (aggregated) model")
    return Posteriors(per_disease, evidence_prob, engine="aggregate")


def abstraction_posteriors(model: AggregatedModel, evidence: Evidence) -> Posteriors:
    """Same as aggregated_posteriors with the aggregate state left out (engine "abstract")."""
    evidence.validate_for(model.source)
    per_disease, evidence_prob = table_posteriors(model.table(False), evidence, "abstraction (base states only)")
    return Posteriors(per_disease, evidence_prob, engine="abstract")


def aggregation_distortion(model: AggregatedModel) -> float:
    """max over similar states s and findings j of |p(f_j|s) - p(f_j|sigma)|."""
    if model.degenerate or model.base.is_complete:
        return 0.0
    net = model.source
    check_state_cap(net.n_diseases, None, "aggregation distortion")
    worst = 0.0
    for codes in iter_code_blocks(net.n_diseases):
        similar = codes[~np.isin(codes, model.base.codes, assume_unique=True)]
        if similar.size:
            gap = np.abs(state_conditionals(net, similar) - model.aggregate_conditionals[None, :])
            worst = max(worst, float(gap.max()))
    return worst


# ------------------------------------------------------------------
# Model files
# ------------------------------------------------------------------
class ModelFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: str = MODEL_KIND
    policy: Dict[str, Any]
    base_states: List[int]
    aggregate_prior: float
    aggregate_conditionals: List[float]
    alpha: List[float]
    degenerate: bool
    network: NetworkFile


def model_to_dict(model: AggregatedModel) -> Dict[str, Any]:
    return {
        "kind": MODEL_KIND,
        "policy": model.base.policy.model_dump(mode="json"),
        "base_states": model.base.codes.tolist(),
        "aggregate_prior": model.aggregate_prior,
        "aggregate_conditionals": model.aggregate_conditionals.tolist(),
        "alpha": model.alpha.tolist(),
        "degenerate": model.degenerate,
        "network": model.source.to_dict(),
    }


def save_model(model: AggregatedModel, path: PathLike) -> Path:
    return write_atomic(path, dumps(model_to_dict(model)))


def model_from_dict(data: Dict[str, Any], origin: str = "<model>") -> AggregatedModel:
    try:
        spec = ModelFile.model_validate(data)
    except ValidationError as e:
        raise InvalidInputError(f"{origin}: invalid reduced-model file\n{e}")
    if spec.kind != MODEL_KIND:
        raise InvalidInputError(f"{origin}: unexpected kind '{spec.kind}'")
    net = Bn2oNetwork(
        priors=spec.network.priors,
        leaks=spec.network.leaks,
        coeffs=spec.network.coeffs,
        provenance=spec.network.provenance or {},
    )
    codes = np.array(spec.base_states, dtype=np.int64)
    if codes.size == 0 or np.any(codes < 0) or np.any(codes >= 1 << net.n_diseases):
        raise InvalidInputError(f"{origin}: base states missing or out of range")
    model = build_aggregated_model(net, base_set_from_codes(net, codes, policy_from_dict(spec.policy)))

    stored = {
        "alpha": np.array(spec.alpha),
        "aggregate_conditionals": np.array(spec.aggregate_conditionals),
        "aggregate_prior": np.array([spec.aggregate_prior]),
    }
    rebuilt = {
        "alpha": model.alpha,
        "aggregate_conditionals": model.aggregate_conditionals,
        "aggregate_prior": np.array([model.aggregate_prior]),
    }
    for name in stored:
        if stored[name].shape != rebuilt[name].shape or not np.allclose(stored[name], rebuilt[name], rtol=0.0, atol=CLAMP_BAND):
            raise InvalidInputError(f"{origin}: stored {name} does not match its embedded network")
    return model


def load_model(path: PathLike) -> AggregatedModel:
    return model_from_dict(read_json(path), origin=str(path))


def load_artifact(path: PathLike) -> Union[Bn2oNetwork, AggregatedModel]:
    """A network file or a reduced-model file, told apart by their keys."""
    data = read_json(path)
    if isinstance(data, dict) and "base_states" in data:
        return model_from_dict(data, origin=str(path))
    try:
        return Bn2oNetwork.from_dict(data)
    except ValidationError as e:
        raise InvalidInputError(f"{path}: invalid network file\n{e}")
