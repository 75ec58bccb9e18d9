"""
Exhaustive error sweeps: exact inference against the reduced models.

For every evidence set in the sweep, exact posteriors are compared with the
aggregated model and with the abstraction baseline built from the same base
states. Evidence is evaluated in fixed-size chunks on a thread pool; chunk
results are folded in chunk order, and ties go to the earliest evidence set,
then the lowest disease index, so the report does not depend on the number
of workers.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Annotated, Any, Dict, Iterator, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .. import __version__
from ..config import Budget, get_budget, get_settings
from ..core.inference import quickscore_posteriors
from ..core.network import Bn2oNetwork, Evidence, codes_to_bits
from ..core.states import StateTable, check_state_cap
from ..errors import ImpossibleEvidenceError, InfeasibleComputationError, InvalidInputError
from ..reduction.aggregation import aggregation_distortion, build_aggregated_model
from ..reduction.base_states import SelectionPolicy, select_base_states

logger = logging.getLogger(__name__)

# exact posteriors below this are left out of the relative error
REL_FLOOR = 1e-12
METHODS = ("aggregation", "abstraction")


# ------------------------------------------------------------------
# Config
# ------------------------------------------------------------------
class AllPositiveSubsets(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["all_positive_subsets"] = "all_positive_subsets"


class PositiveUpTo(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["positive_up_to"] = "positive_up_to"
    k: int = Field(ge=0)


EvidenceMode = Annotated[Union[AllPositiveSubsets, PositiveUpTo], Field(discriminator="kind")]


class SweepConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    evidence_mode: EvidenceMode = AllPositiveSubsets()
    # None: the budget's default engine
    exact_engine: Optional[Literal["brute", "quickscore"]] = None
    reductions: List[SelectionPolicy] = Field(default_factory=list)
    # findings outside the positive subset: left unobserved, or observed negative
    unobserved: Literal["absent", "negative"] = "absent"
    chunk_size: int = Field(256, ge=1)


def sweep_config_from_dict(data) -> SweepConfig:
    try:
        return SweepConfig.model_validate(data)
    except ValidationError as e:
        raise InvalidInputError(f"invalid sweep config\n{e}")


# ------------------------------------------------------------------
# Evidence enumeration
# ------------------------------------------------------------------
def evidence_count(cfg: SweepConfig, n_findings: int) -> int:
    if isinstance(cfg.evidence_mode, PositiveUpTo):
        k = min(cfg.evidence_mode.k, n_findings)
        return sum(math.comb(n_findings, i) for i in range(k + 1))
    return 1 << n_findings


def evidence_codes(cfg: SweepConfig, n_findings: int, budget: Optional[Budget] = None) -> np.ndarray:
    """Integer encodings of the positive sets, ascending."""
    budget = budget or get_budget()
    count = evidence_count(cfg, n_findings)
    if count > budget.max_evidence_sets:
        raise InfeasibleComputationError(
            f"sweep needs {count} evidence sets, budget '{budget.name}' allows {budget.max_evidence_sets}"
        )
    codes = np.arange(1 << n_findings, dtype=np.int64)
    if isinstance(cfg.evidence_mode, PositiveUpTo):
        sizes = codes_to_bits(codes, n_findings).sum(axis=1)
        codes = codes[sizes <= cfg.evidence_mode.k]
    return codes


def _masks(cfg: SweepConfig, codes: np.ndarray, n_findings: int) -> Tuple[np.ndarray, np.ndarray]:
    positive = codes_to_bits(codes, n_findings)
    negative = ~positive if cfg.unobserved == "negative" else np.zeros_like(positive)
    return positive, negative


def enumerate_evidence(cfg: SweepConfig, n_findings: int, budget: Optional[Budget] = None) -> Iterator[Evidence]:
    """
    Evidence sets in ascending order of the positive set's integer encoding.

    Finding i is bit i, so AllPositiveSubsets starts at the empty set and ends
    with every finding positive.
    """
    codes = evidence_codes(cfg, n_findings, budget)
    positive, negative = _masks(cfg, codes, n_findings)
    for pos, neg in zip(positive, negative):
        yield Evidence.of(np.flatnonzero(pos).tolist(), np.flatnonzero(neg).tolist())


# ------------------------------------------------------------------
# Report types
# ------------------------------------------------------------------
@dataclass
class ErrorRow:
    policy: str
    kind: str
    param: float
    method: str
    n_base: int
    fraction: float
    sigma_prior_mass: float
    max_abs_error: float
    max_abs_at: Optional[Dict[str, Any]]
    max_rel_error: float
    max_rel_at: Optional[Dict[str, Any]]
    failures: int
    rel_skipped: int
    distortion: Optional[float]
    wall_ms: float

    def to_dict(self) -> Dict[str, Any]:
        return dict(self.__dict__)


@dataclass
class CurvePoint:
    policy: str
    param: float
    method: str
    n_positive: int
    n_evidence: int
    max_abs_error: float
    max_rel_error: float


@dataclass
class ErrorReport:
    rows: List[ErrorRow]
    curves: List[CurvePoint]
    exact_engine: str
    n_evidence: int
    exact_skipped: int
    runtime: Dict[str, float] = field(default_factory=dict)
    provenance: Dict[str, Any] = field(default_factory=dict)

    def row(self, policy: str, method: str = "aggregation") -> ErrorRow:
        for r in self.rows:
            if r.policy == policy and r.method == method:
                return r
        raise KeyError((policy, method))


# ------------------------------------------------------------------
# Chunk folding
# ------------------------------------------------------------------
@dataclass
class _Extremes:
    n_diseases: int
    n_findings: int
    max_abs: float = 0.0
    abs_at: Optional[Tuple[int, int]] = None
    max_rel: float = 0.0
    rel_at: Optional[Tuple[int, int]] = None
    failures: int = 0
    rel_skipped: int = 0
    curve_abs: np.ndarray = None
    curve_rel: np.ndarray = None

    def __post_init__(self):
        if self.curve_abs is None:
            self.curve_abs = np.zeros(self.n_findings + 1)
            self.curve_rel = np.zeros(self.n_findings + 1)

    def merge(self, other: "_Extremes") -> None:
        # strictly greater keeps the earlier chunk on ties
        if other.max_abs > self.max_abs:
            self.max_abs, self.abs_at = other.max_abs, other.abs_at
        if other.max_rel > self.max_rel:
            self.max_rel, self.rel_at = other.max_rel, other.rel_at
        self.failures += other.failures
        self.rel_skipped += other.rel_skipped
        np.maximum(self.curve_abs, other.curve_abs, out=self.curve_abs)
        np.maximum(self.curve_rel, other.curve_rel, out=self.curve_rel)


def _peak(err: np.ndarray, start: int) -> Tuple[float, Optional[Tuple[int, int]]]:
    if err.size == 0:
        return 0.0, None
    flat = int(np.argmax(err))  # first occurrence in row-major order
    value = float(err.flat[flat])
    if value <= 0.0:
        return 0.0, None
    n1 = err.shape[1]
    return value, (start + flat // n1, flat % n1)


def _compare_chunk(
    table: StateTable,
    start: int,
    positive: np.ndarray,
    negative: np.ndarray,
    exact_post: np.ndarray,
    exact_ok: np.ndarray,
    n_positive: np.ndarray,
) -> _Extremes:
    post, _, ok = table.batch(positive, negative)
    usable = exact_ok & ok
    out = _Extremes(n_diseases=exact_post.shape[1], n_findings=positive.shape[1])
    out.failures = int(np.count_nonzero(exact_ok & ~ok))

    abs_err = np.where(usable[:, None], np.abs(post - exact_post), 0.0)
    guarded = usable[:, None] & (exact_post >= REL_FLOOR)
    out.rel_skipped = int(np.count_nonzero(usable[:, None] & ~guarded))
    rel_err = np.zeros_like(abs_err)
    np.divide(abs_err, exact_post, out=rel_err, where=guarded)

    out.max_abs, out.abs_at = _peak(abs_err, start)
    out.max_rel, out.rel_at = _peak(rel_err, start)
    if usable.any():
        np.maximum.at(out.curve_abs, n_positive[usable], abs_err[usable].max(axis=1))
        np.maximum.at(out.curve_rel, n_positive[usable], rel_err[usable].max(axis=1))
    return out


def _chunk_bounds(total: int, table_size: int, chunk_size: int) -> List[Tuple[int, int]]:
    rows = max(1, min(chunk_size, get_settings().batch_elements // max(table_size, 1)))
    return [(s, min(s + rows, total)) for s in range(0, total, rows)]


# ------------------------------------------------------------------
# Exact pass
# ------------------------------------------------------------------
def _exact_brute_chunk(table: StateTable, positive, negative):
    post, _, ok = table.batch(positive, negative)
    return post, ok


def _exact_quickscore_chunk(net: Bn2oNetwork, positive, negative):
    post = np.zeros((positive.shape[0], net.n_diseases))
    ok = np.zeros(positive.shape[0], dtype=bool)
    for r in range(positive.shape[0]):
        evidence = Evidence.of(np.flatnonzero(positive[r]).tolist(), np.flatnonzero(negative[r]).tolist())
        try:
            post[r] = quickscore_posteriors(net, evidence).per_disease
            ok[r] = True
        except ImpossibleEvidenceError:
            pass
    return post, ok


def _check_engine(net: Bn2oNetwork, engine: str, budget: Budget, positive: np.ndarray) -> None:
    if engine == "brute":
        if (1 << net.n_diseases) > budget.max_state_space:
            raise InfeasibleComputationError(
                f"brute-force sweep over 2^{net.n_diseases} states exceeds budget '{budget.name}'"
                f" ({budget.max_state_space} states); use --budget large or the quickscore engine"
            )
        check_state_cap(net.n_diseases, None, "brute-force sweep")
    else:
        most = int(positive.sum(axis=1).max()) if positive.size else 0
        if most > get_settings().positive_cap:
            raise InfeasibleComputationError(
                f"quickscore sweep reaches {most} positive findings, above BN2O_POSITIVE_CAP"
            )


# ------------------------------------------------------------------
# Sweep
# ------------------------------------------------------------------
def error_sweep(
    net: Bn2oNetwork,
    sweep: SweepConfig,
    budget: Optional[str] = None,
    workers: Optional[int] = None,
) -> ErrorReport:
    """
    Compare exact and reduced posteriors over every evidence set of the sweep.

    Evidence that is impossible under the exact model is skipped and counted
    in ErrorReport.exact_skipped. Evidence that only the reduced model rules
    out is counted in the row's failures and left out of its maxima.

    Returns:
        ErrorReport with two rows per policy (aggregation, abstraction),
        sorted by policy kind and parameter.
    """
    plan = get_budget(budget)
    engine = sweep.exact_engine or plan.exact_engine
    workers = workers or get_settings().workers
    n1, n2 = net.n_diseases, net.n_findings

    codes = evidence_codes(sweep, n2, plan)
    positive, negative = _masks(sweep, codes, n2)
    n_positive = positive.sum(axis=1)
    _check_engine(net, engine, plan, positive)
    total = int(codes.size)
    logger.info(
        "sweep: %dx%d network, %d evidence sets, exact engine %s, %d policies, %d workers",
        n1, n2, total, engine, len(sweep.reductions), workers,
    )

    runtime: Dict[str, float] = {}
    exact_post = np.zeros((total, n1))
    exact_ok = np.zeros(total, dtype=bool)

    with ThreadPoolExecutor(max_workers=workers) as executor:
        t0 = time.perf_counter()
        if engine == "brute":
            full = StateTable.full(net)
            bounds = _chunk_bounds(total, full.size, sweep.chunk_size)
            futures = [executor.submit(_exact_brute_chunk, full, positive[a:b], negative[a:b]) for a, b in bounds]
        else:
            bounds = _chunk_bounds(total, 1, sweep.chunk_size)
            futures = [executor.submit(_exact_quickscore_chunk, net, positive[a:b], negative[a:b]) for a, b in bounds]
        for (a, b), future in zip(bounds, futures):
            exact_post[a:b], exact_ok[a:b] = future.result()
        runtime["exact_ms"] = (time.perf_counter() - t0) * 1e3

        exact_skipped = int(np.count_nonzero(~exact_ok))
        if exact_skipped:
            logger.warning("%d evidence sets are impossible under the exact model and were skipped", exact_skipped)
        counts = np.bincount(n_positive[exact_ok], minlength=n2 + 1)

        rows: List[ErrorRow] = []
        curves: List[CurvePoint] = []
        policies = sorted(sweep.reductions, key=lambda p: (p.kind, p.param))
        for policy in policies:
            t0 = time.perf_counter()
            base = select_base_states(net, policy)
            model = build_aggregated_model(net, base)
            try:
                distortion = aggregation_distortion(model)
            except InfeasibleComputationError:
                distortion = None
            build_ms = (time.perf_counter() - t0) * 1e3

            for method in METHODS:
                t0 = time.perf_counter()
                table = model.table(include_aggregate=method == "aggregation")
                bounds = _chunk_bounds(total, table.size, sweep.chunk_size)
                futures = [
                    executor.submit(
                        _compare_chunk, table, a, positive[a:b], negative[a:b],
                        exact_post[a:b], exact_ok[a:b], n_positive[a:b],
                    )
                    for a, b in bounds
                ]
                folded = _Extremes(n_diseases=n1, n_findings=n2)
                for future in futures:
                    folded.merge(future.result())
                wall_ms = build_ms + (time.perf_counter() - t0) * 1e3
                runtime[f"{policy.descriptor}/{method}_ms"] = wall_ms

                if folded.failures:
                    logger.warning(
                        "%s/%s: %d evidence sets impossible under the reduced model",
                        policy.descriptor, method, folded.failures,
                    )
                rows.append(ErrorRow(
                    policy=policy.descriptor,
                    kind=policy.kind,
                    param=policy.param,
                    method=method,
                    n_base=base.n_base,
                    fraction=base.fraction,
                    sigma_prior_mass=model.aggregate_prior,
                    max_abs_error=folded.max_abs,
                    max_abs_at=_locate(folded.abs_at, positive, negative),
                    max_rel_error=folded.max_rel,
                    max_rel_at=_locate(folded.rel_at, positive, negative),
                    failures=folded.failures,
                    rel_skipped=folded.rel_skipped,
                    distortion=distortion,
                    wall_ms=wall_ms,
                ))
                for k in range(n2 + 1):
                    if counts[k]:
                        curves.append(CurvePoint(
                            policy=policy.descriptor,
                            param=policy.param,
                            method=method,
                            n_positive=k,
                            n_evidence=int(counts[k]),
                            max_abs_error=float(folded.curve_abs[k]),
                            max_rel_error=float(folded.curve_rel[k]),
                        ))
            logger.info(
                "%s: N_b=%d, sigma mass %.3e, max abs %.3e (aggregation) / %.3e (abstraction), %.0f ms",
                policy.descriptor, base.n_base, model.aggregate_prior,
                rows[-2].max_abs_error, rows[-1].max_abs_error, runtime[f"{policy.descriptor}/aggregation_ms"],
            )

    generator = net.provenance.get("generator") if net.provenance else None
    provenance = {
        "seed": generator.get("seed") if isinstance(generator, dict) else None,
        "generator": generator,
        "sweep": sweep.model_dump(mode="json"),
        "budget": plan.name,
        "exact_engine": engine,
        "n_diseases": n1,
        "n_findings": n2,
        "bn2o_version": __version__,
    }
    return ErrorReport(
        rows=rows,
        curves=curves,
        exact_engine=engine,
        n_evidence=total,
        exact_skipped=exact_skipped,
        runtime=runtime,
        provenance=provenance,
    )


def _locate(at: Optional[Tuple[int, int]], positive: np.ndarray, negative: np.ndarray) -> Optional[Dict[str, Any]]:
    if at is None:
        return None
    row, disease = at
    return {
        "evidence": Evidence.of(np.flatnonzero(positive[row]).tolist(), np.flatnonzero(negative[row]).tolist()).to_dict(),
        "disease": int(disease),
    }
