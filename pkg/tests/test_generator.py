import numpy as np
import pytest
from scipy import stats

from bn2o.core.io import save_network
from bn2o.errors import InvalidInputError
from bn2o.experiments.generator import (
    FixedSource,
    GeneratorConfig,
    PoolSource,
    UniformSource,
    generate_network,
    generator_config_from_dict,
    sample_beta_2_4,
    synthetic_cpcs_pool,
)


def test_beta_2_4_moments():
    draws = sample_beta_2_4(np.random.default_rng(2024), 10 ** 6)
    assert draws.mean() == pytest.approx(1 / 3, abs=0.002)
    assert draws.var() == pytest.approx(8 / 252, abs=0.002)
    assert draws.min() >= 0.0 and draws.max() <= 1.0


def test_beta_2_4_distribution():
    draws = sample_beta_2_4(np.random.default_rng(7), 20000)
    assert stats.kstest(draws, stats.beta(2, 4).cdf).pvalue > 1e-3


def test_beta_2_4_scalar():
    value = sample_beta_2_4(np.random.default_rng(0))
    assert isinstance(value, float)
    assert 0.0 <= value <= 1.0


def test_same_seed_same_file(tmp_path):
    cfg = GeneratorConfig(n_diseases=6, n_findings=5, seed=42)
    a = save_network(generate_network(cfg), tmp_path / "a.json")
    b = save_network(generate_network(cfg), tmp_path / "b.json")
    assert a.read_bytes() == b.read_bytes()
    c = save_network(generate_network(cfg.model_copy(update={"seed": 43})), tmp_path / "c.json")
    assert a.read_bytes() != c.read_bytes()


def test_beta_network_18x18():
    net = generate_network(GeneratorConfig(n_diseases=18, n_findings=18, seed=1))
    assert net.coeffs.size == 324
    assert net.coeffs.mean() == pytest.approx(0.33, abs=0.08)
    assert np.all((net.priors >= 0.01) & (net.priors <= 0.2))
    assert np.all(net.leaks <= 0.1)


def test_pool_network_draws_from_pool():
    pool = (0.0, 0.25, 0.5, 1.0)
    net = generate_network(GeneratorConfig(n_diseases=5, n_findings=7, coeff_source=PoolSource(values=pool), seed=3))
    assert set(np.unique(net.coeffs)) <= set(pool)


def test_fixed_sources():
    cfg = GeneratorConfig(
        n_diseases=3, n_findings=2, prior_source=FixedSource(value=0.1), leak_source=FixedSource(value=0.0)
    )
    net = generate_network(cfg)
    assert net.priors.tolist() == [0.1, 0.1, 0.1]
    assert net.leaks.tolist() == [0.0, 0.0]


def test_provenance_replays_the_network():
    net = generate_network(GeneratorConfig(n_diseases=4, n_findings=4, seed=99))
    replay = generate_network(generator_config_from_dict(net.provenance["generator"]))
    np.testing.assert_array_equal(replay.coeffs, net.coeffs)


@pytest.mark.parametrize(
    "data",
    [
        {"n_diseases": 0},
        {"seed": -1},
        {"seed": 2 ** 64},
        {"prior_source": {"kind": "uniform", "lo": 0.5, "hi": 0.2}},
        {"coeff_source": {"kind": "pool", "values": []}},
        {"coeff_source": {"kind": "pool", "values": [0.5, 1.2]}},
        {"leak_source": {"kind": "fixed", "value": 2.0}},
        {"colour": "blue"},
    ],
)
def test_invalid_configs(data):
    with pytest.raises(InvalidInputError):
        generator_config_from_dict(data)


def test_uniform_source_bounds():
    with pytest.raises(ValueError):
        UniformSource(lo=0.3, hi=0.1)


# ------------------------------------------------------------------
# CPCS-like pool
# ------------------------------------------------------------------
def test_cpcs_pool_is_deterministic():
    assert synthetic_cpcs_pool() == synthetic_cpcs_pool()
    assert len(synthetic_cpcs_pool()) == 1000


def test_cpcs_pool_shape():
    pool = np.array(synthetic_cpcs_pool())
    assert pool.min() >= 0.0 and pool.max() <= 1.0
    near_edges = (pool <= 0.05) | (pool >= 0.95)
    assert near_edges.mean() >= 0.4

    # bins centred on multiples of 0.05
    counts, _ = np.histogram(pool, bins=np.linspace(-0.025, 1.025, 22))
    for centre in (0.2, 0.5, 0.8):
        k = int(round(centre / 0.05))
        assert counts[k] > counts[k - 1] and counts[k] > counts[k + 1], centre
