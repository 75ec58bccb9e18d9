"""
Runtime configuration.

Values come from the process environment, optionally seeded from a ``.env``
file in the working directory. Caps are configuration rather than constants:
every function that enumerates states or subsets takes an explicit override
and falls back to these settings.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Literal

import psutil
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import InvalidInputError

load_dotenv()


# ------------------------------------------------------------------
# Budgets
# ------------------------------------------------------------------
@dataclass(frozen=True)
class Budget:
    name: str
    max_evidence_sets: int
    max_state_space: int
    exact_engine: str


BUDGETS: Dict[str, Budget] = {
    # 12x12 exhaustive: 2^12 evidence sets against 2^12 states
    "desk": Budget("desk", max_evidence_sets=2 ** 14, max_state_space=2 ** 14, exact_engine="brute"),
    "large": Budget("large", max_evidence_sets=2 ** 18, max_state_space=2 ** 20, exact_engine="quickscore"),
}


def get_budget(name: str | None = None) -> Budget:
    name = name or get_settings().budget
    try:
        return BUDGETS[name]
    except KeyError:
        raise InvalidInputError(f"unknown budget '{name}' (expected one of {sorted(BUDGETS)})")


# ------------------------------------------------------------------
# Settings
# ------------------------------------------------------------------
def _default_workers() -> int:
    return psutil.cpu_count(logical=False) or os.cpu_count() or 1


class Settings(BaseModel):
    budget: Literal["desk", "large"] = "desk"
    state_cap: int = Field(24, ge=1, le=40)
    positive_cap: int = Field(24, ge=0, le=40)
    workers: int = Field(default_factory=_default_workers, ge=1)
    batch_elements: int = Field(2 ** 22, ge=1024)
    log_level: str = "INFO"

    @field_validator("log_level")
    @classmethod
    def _upper(cls, v: str) -> str:
        return v.upper()


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    env = {
        "budget": os.getenv("BN2O_BUDGET"),
        "state_cap": os.getenv("BN2O_STATE_CAP"),
        "positive_cap": os.getenv("BN2O_POSITIVE_CAP"),
        "workers": os.getenv("BN2O_WORKERS"),
        "batch_elements": os.getenv("BN2O_BATCH_ELEMENTS"),
        "log_level": os.getenv("BN2O_LOG_LEVEL"),
    }
    try:
        return Settings(**{k: v for k, v in env.items() if v not in (None, "")})
    except ValidationError as e:
        raise InvalidInputError(f"invalid BN2O_* environment settings\n{e}")
