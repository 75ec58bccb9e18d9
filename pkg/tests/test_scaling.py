import numpy as np
import pytest

from bn2o.core.network import Evidence
from bn2o.errors import InvalidInputError
from bn2o.experiments.generator import GeneratorConfig, generate_network
from bn2o.experiments.scaling import inference_scaling
from bn2o.reduction.base_states import DMaxPolicy


def _evidence(n_findings, count, seed=0):
    rng = np.random.default_rng(seed)
    return [Evidence.of(np.flatnonzero(row < 0.3).tolist()) for row in rng.random((count, n_findings))]


def test_scaling_report_shape(make_net):
    net = make_net(6, 6)
    report = inference_scaling(net, [DMaxPolicy(d_max=1), DMaxPolicy(d_max=3)], _evidence(6, 8), repeats=1)
    assert [p.n_states for p in report.points] == [8, 43]
    assert all(p.seconds > 0 for p in report.points)
    assert 0.0 <= report.r_squared <= 1.0


def test_scaling_needs_two_policies(make_net):
    with pytest.raises(InvalidInputError):
        inference_scaling(make_net(4, 4), [DMaxPolicy(d_max=1)], _evidence(4, 2))
    with pytest.raises(InvalidInputError):
        inference_scaling(make_net(4, 4), [DMaxPolicy(d_max=1), DMaxPolicy(d_max=2)], [])


@pytest.mark.slow
def test_cost_is_linear_in_reduced_states():
    net = generate_network(GeneratorConfig(n_diseases=14, n_findings=14, seed=0))
    policies = [DMaxPolicy(d_max=d) for d in range(1, 8)]
    report = inference_scaling(net, policies, _evidence(14, 512), repeats=7)
    sizes = [p.n_states for p in report.points]
    assert sizes[-1] / sizes[0] >= 100
    assert report.slope > 0
    assert report.r_squared > 0.95
