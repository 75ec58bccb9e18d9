import numpy as np
import pytest

from bn2o.config import get_budget
from bn2o.core.inference import quickscore_posteriors
from bn2o.core.network import Evidence
from bn2o.errors import InfeasibleComputationError, InvalidInputError
from bn2o.experiments.generator import GeneratorConfig, PoolSource, generate_network
from bn2o.experiments.sweep import (
    PositiveUpTo,
    SweepConfig,
    enumerate_evidence,
    error_sweep,
    sweep_config_from_dict,
)
from bn2o.reduction.aggregation import aggregated_posteriors, build_aggregated_model
from bn2o.reduction.base_states import DMaxPolicy, LambdaPolicy, select_base_states


def test_enumerate_all_positive_subsets():
    sets = list(enumerate_evidence(SweepConfig(), 3, get_budget("desk")))
    assert len(sets) == 8
    assert sets[0] == Evidence()
    assert sets[-1] == Evidence.of([0, 1, 2])
    assert sets[1] == Evidence.of([0])
    assert sets[2] == Evidence.of([1])


def test_enumerate_positive_up_to():
    cfg = SweepConfig(evidence_mode=PositiveUpTo(k=1))
    sets = list(enumerate_evidence(cfg, 18, get_budget("desk")))
    assert len(sets) == 19
    assert all(len(ev.positive) <= 1 for ev in sets)


def test_enumerate_unobserved_as_negative():
    cfg = SweepConfig(unobserved="negative")
    sets = list(enumerate_evidence(cfg, 2, get_budget("desk")))
    assert sets[0] == Evidence.of([], [0, 1])
    assert sets[3] == Evidence.of([0, 1], [])


def test_enumeration_budget():
    with pytest.raises(InfeasibleComputationError):
        list(enumerate_evidence(SweepConfig(), 15, get_budget("desk")))
    assert len(list(enumerate_evidence(SweepConfig(evidence_mode=PositiveUpTo(k=2)), 15, get_budget("desk")))) == 121


def test_sweep_config_from_dict():
    cfg = sweep_config_from_dict({
        "evidence_mode": {"kind": "positive_up_to", "k": 3},
        "reductions": [{"kind": "dmax", "d_max": 2}, {"kind": "lambda", "threshold": 0.4}],
        "exact_engine": "quickscore",
    })
    assert cfg.evidence_mode == PositiveUpTo(k=3)
    assert cfg.reductions[1] == LambdaPolicy(threshold=0.4)
    with pytest.raises(InvalidInputError):
        sweep_config_from_dict({"exact_engine": "gibbs"})


def test_full_base_policy_has_zero_error(make_net):
    net = make_net(6, 6, seed=5)
    report = error_sweep(net, SweepConfig(reductions=[DMaxPolicy(d_max=6)]))
    for row in report.rows:
        assert row.max_abs_error == 0.0
        assert row.max_rel_error == 0.0
        assert row.failures == 0
        assert row.fraction == 1.0
    assert report.n_evidence == 64


@pytest.mark.parametrize("seed", range(10))
def test_refining_dmax_never_worsens_the_abstraction(make_net, seed):
    net = make_net(7, 7, seed=seed)
    report = error_sweep(net, SweepConfig(reductions=[DMaxPolicy(d_max=d) for d in range(8)]))
    errors = [report.row(f"dmax:{d}", "abstraction").max_abs_error for d in range(8)]
    assert all(finer <= coarser + 1e-12 for coarser, finer in zip(errors, errors[1:])), errors
    assert report.row("dmax:7", "aggregation").max_abs_error == 0.0
    assert errors[-1] == 0.0


def test_rows_are_sorted_and_paired(make_net):
    net = make_net(6, 6, seed=1)
    policies = [LambdaPolicy(threshold=0.5), DMaxPolicy(d_max=3), DMaxPolicy(d_max=1)]
    report = error_sweep(net, SweepConfig(reductions=policies))
    assert [(r.policy, r.method) for r in report.rows] == [
        ("dmax:1", "aggregation"), ("dmax:1", "abstraction"),
        ("dmax:3", "aggregation"), ("dmax:3", "abstraction"),
        ("lambda:0.5", "aggregation"), ("lambda:0.5", "abstraction"),
    ]
    for row in report.rows:
        assert row.max_abs_error >= 0.0 and row.max_rel_error >= 0.0
        assert 0.0 < row.fraction <= 1.0


def test_maxima_match_direct_evaluation(make_net):
    net = make_net(6, 6, seed=3)
    policy = DMaxPolicy(d_max=2)
    report = error_sweep(net, SweepConfig(reductions=[policy]))
    row = report.row("dmax:2", "aggregation")

    model = build_aggregated_model(net, select_base_states(net, policy))
    worst = 0.0
    for ev in enumerate_evidence(SweepConfig(), 6, get_budget("desk")):
        exact = quickscore_posteriors(net, ev).per_disease
        worst = max(worst, float(np.max(np.abs(aggregated_posteriors(model, ev).per_disease - exact))))
    assert row.max_abs_error == pytest.approx(worst, abs=1e-9)

    at = row.max_abs_at
    ev = Evidence.of(at["evidence"]["positive"], at["evidence"]["negative"])
    gap = abs(aggregated_posteriors(model, ev).per_disease[at["disease"]] - quickscore_posteriors(net, ev).per_disease[at["disease"]])
    assert gap == pytest.approx(row.max_abs_error, abs=1e-9)


def test_relative_error_dominates_absolute(make_net):
    net = make_net(6, 6, seed=8)
    report = error_sweep(net, SweepConfig(reductions=[DMaxPolicy(d_max=d) for d in range(1, 4)]))
    for row in report.rows:
        assert row.max_rel_error >= row.max_abs_error


def test_serial_and_parallel_runs_agree(make_net):
    net = make_net(8, 8, seed=2)
    cfg = SweepConfig(reductions=[DMaxPolicy(d_max=2), LambdaPolicy(threshold=0.4)], chunk_size=7)
    serial = error_sweep(net, cfg, workers=1)
    parallel = error_sweep(net, cfg, workers=4)
    for a, b in zip(serial.rows, parallel.rows):
        assert (a.max_abs_error, a.max_abs_at, a.max_rel_error, a.max_rel_at) == (
            b.max_abs_error, b.max_abs_at, b.max_rel_error, b.max_rel_at
        )
    assert [c.__dict__ for c in serial.curves] == [c.__dict__ for c in parallel.curves]


def test_exact_engines_give_the_same_report(make_net):
    net = make_net(6, 6, seed=4)
    policies = [DMaxPolicy(d_max=2)]
    brute = error_sweep(net, SweepConfig(reductions=policies, exact_engine="brute"))
    quick = error_sweep(net, SweepConfig(reductions=policies, exact_engine="quickscore"))
    assert quick.exact_engine == "quickscore"
    for a, b in zip(brute.rows, quick.rows):
        assert a.max_abs_error == pytest.approx(b.max_abs_error, abs=1e-9)


def test_curves_cover_every_cardinality(make_net):
    net = make_net(5, 5, seed=6)
    report = error_sweep(net, SweepConfig(reductions=[DMaxPolicy(d_max=1)]))
    agg = [c for c in report.curves if c.method == "aggregation"]
    assert [c.n_positive for c in agg] == [0, 1, 2, 3, 4, 5]
    assert [c.n_evidence for c in agg] == [1, 5, 10, 10, 5, 1]
    # empty evidence reproduces the priors exactly
    assert agg[0].max_abs_error == pytest.approx(0.0, abs=1e-12)
    row = report.row("dmax:1", "aggregation")
    assert max(c.max_abs_error for c in agg) == row.max_abs_error


def test_no_policies(make_net):
    report = error_sweep(make_net(4, 4), SweepConfig())
    assert report.rows == [] and report.curves == []
    assert report.provenance["seed"] == 0


def test_brute_engine_outside_budget():
    net = generate_network(GeneratorConfig(n_diseases=15, n_findings=3, seed=0))
    with pytest.raises(InfeasibleComputationError, match="budget"):
        error_sweep(net, SweepConfig(exact_engine="brute"), budget="desk")


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_desk_scale_headline(seed):
    """12x12 Beta(2,4) network, every positive subset."""
    net = generate_network(GeneratorConfig(n_diseases=12, n_findings=12, seed=seed))
    policies = [DMaxPolicy(d_max=d) for d in range(3, 7)]
    report = error_sweep(net, SweepConfig(reductions=policies), budget="desk")
    assert report.n_evidence == 4096

    assert report.row("dmax:6", "aggregation").max_abs_error < 0.01
    for d in range(3, 7):
        agg = report.row(f"dmax:{d}", "aggregation")
        abstraction = report.row(f"dmax:{d}", "abstraction")
        assert agg.max_abs_error <= abstraction.max_abs_error
    masses = [report.row(f"dmax:{d}").sigma_prior_mass for d in range(3, 7)]
    assert all(a > b for a, b in zip(masses, masses[1:]))


@pytest.mark.slow
def test_cpcs_like_lambda_table():
    """18x18 network from the CPCS-like pool, lambda in {0.3, ..., 0.6}, up to 10 positives."""
    net = generate_network(
        GeneratorConfig(n_diseases=18, n_findings=18, coeff_source=PoolSource.cpcs_like(), seed=0)
    )
    lambdas = (0.3, 0.4, 0.5, 0.6)
    cfg = SweepConfig(
        evidence_mode=PositiveUpTo(k=10),
        exact_engine="brute",
        reductions=[LambdaPolicy(threshold=t) for t in lambdas],
    )
    report = error_sweep(net, cfg, budget="large")
    rows = [report.row(f"lambda:{t:g}") for t in lambdas]
    fractions = [r.fraction for r in rows]
    assert all(a < b for a, b in zip(fractions, fractions[1:]))
    abs_errors = [r.max_abs_error for r in rows]
    rel_errors = [r.max_rel_error for r in rows]
    assert all(a >= b for a, b in zip(abs_errors, abs_errors[1:]))
    assert all(a >= b for a, b in zip(rel_errors, rel_errors[1:]))
    assert rel_errors[-1] * 10 <= rel_errors[0]
