import logging
import os
import sys

import hypothesis
import numpy as np
import pytest

# Add src/ to the Python path so the tests run from a plain checkout
sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "src"))

from bn2o.config import get_settings  # noqa: E402
from bn2o.core.network import Bn2oNetwork  # noqa: E402
from bn2o.experiments.generator import GeneratorConfig, generate_network  # noqa: E402

np.seterr(all="warn")

hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.register_profile("debugger", report_multiple_bugs=False, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run the 18x18 and timing experiments")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running experiment, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Settings are cached per process; tests that patch BN2O_* need a clean cache.

    The CLI binds its log handler to the stderr of the test that ran it, so
    it is dropped again afterwards.
    """
    for name in list(os.environ):
        if name.startswith("BN2O_"):
            monkeypatch.delenv(name, raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()
    bn2o_logger = logging.getLogger("bn2o")
    for handler in [h for h in bn2o_logger.handlers if getattr(h, "_bn2o", False)]:
        bn2o_logger.removeHandler(handler)
    bn2o_logger.propagate = True


@pytest.fixture
def make_net():
    def _make(n_diseases=6, n_findings=6, seed=0, **kwargs):
        return generate_network(GeneratorConfig(n_diseases=n_diseases, n_findings=n_findings, seed=seed, **kwargs))

    return _make


@pytest.fixture
def tiny_net():
    """One disease, one finding: p(d)=0.1, Leak=0.05, c=0.8."""
    return Bn2oNetwork(priors=[0.1], leaks=[0.05], coeffs=[[0.8]])
