import pytest

from bn2o.config import BUDGETS, get_budget, get_settings
from bn2o.errors import InvalidInputError


def test_defaults():
    s = get_settings()
    assert s.budget == "desk"
    assert s.state_cap == 24
    assert s.positive_cap == 24
    assert s.batch_elements == 2 ** 22
    assert s.workers >= 1
    assert s.log_level == "INFO"


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("BN2O_STATE_CAP", "10")
    monkeypatch.setenv("BN2O_BUDGET", "large")
    monkeypatch.setenv("BN2O_LOG_LEVEL", "debug")
    get_settings.cache_clear()
    s = get_settings()
    assert s.state_cap == 10
    assert s.log_level == "DEBUG"
    assert get_budget() is BUDGETS["large"]


def test_invalid_environment(monkeypatch):
    monkeypatch.setenv("BN2O_STATE_CAP", "many")
    get_settings.cache_clear()
    with pytest.raises(InvalidInputError, match="BN2O_"):
        get_settings()


def test_budgets():
    assert get_budget("desk").exact_engine == "brute"
    assert get_budget("large").exact_engine == "quickscore"
    assert get_budget("desk").max_evidence_sets >= 2 ** 12
    with pytest.raises(InvalidInputError):
        get_budget("huge")
