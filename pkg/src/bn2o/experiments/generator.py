"""
Random BN2O network families.

- Beta(2,4) coefficients (mean 1/3), fully connected
- coefficients drawn with replacement from a pool; the built-in pool mimics
  diagnostic-network coefficients clustered near 0, 0.2, 0.5, 0.8 and 1

Generation uses numpy's PCG64 generator seeded from the config, with a fixed
draw order (coefficients, then priors, then leaks). Networks are saved with
their generator config so every experiment can be replayed from the file.
"""

from __future__ import annotations

import logging
from functools import lru_cache
from typing import Annotated, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .. import __version__
from ..core.network import Bn2oNetwork
from ..errors import InvalidInputError

logger = logging.getLogger(__name__)


# ------------------------------------------------------------------
# Sources
# ------------------------------------------------------------------
class Beta24Source(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["beta24"] = "beta24"


class PoolSource(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["pool"] = "pool"
    values: Tuple[float, ...]

    @field_validator("values")
    @classmethod
    def _check_pool(cls, v: Tuple[float, ...]) -> Tuple[float, ...]:
        if not v:
            raise ValueError("coefficient pool must not be empty")
        if any(not 0.0 <= x <= 1.0 for x in v):
            raise ValueError("pool values must lie in [0, 1]")
        return v

    @classmethod
    def cpcs_like(cls) -> "PoolSource":
        return cls(values=synthetic_cpcs_pool())


class UniformSource(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["uniform"] = "uniform"
    lo: float = Field(ge=0.0, le=1.0)
    hi: float = Field(ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _ordered(self) -> "UniformSource":
        if self.lo > self.hi:
            raise ValueError(f"uniform source needs lo <= hi, got lo={self.lo}, hi={self.hi}")
        return self


class FixedSource(BaseModel):
    model_config = ConfigDict(frozen=True)
    kind: Literal["fixed"] = "fixed"
    value: float = Field(ge=0.0, le=1.0)


CoeffSource = Annotated[Union[Beta24Source, PoolSource], Field(discriminator="kind")]
ValueSource = Annotated[Union[UniformSource, FixedSource], Field(discriminator="kind")]


class GeneratorConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_diseases: int = Field(12, ge=1)
    n_findings: int = Field(12, ge=1)
    coeff_source: CoeffSource = Beta24Source()
    prior_source: ValueSource = UniformSource(lo=0.01, hi=0.2)
    leak_source: ValueSource = UniformSource(lo=0.0, hi=0.1)
    seed: int = Field(0, ge=0, lt=2 ** 64)


def generator_config_from_dict(data) -> GeneratorConfig:
    try:
        return GeneratorConfig.model_validate(data)
    except ValidationError as e:
        raise InvalidInputError(f"invalid generator config\n{e}")


# ------------------------------------------------------------------
# Sampling
# ------------------------------------------------------------------
def sample_beta_2_4(rng: np.random.Generator, size=None):
    """
    Beta(2, 4) by order statistics: the 2nd smallest of 5 uniforms.

    The k-th smallest of n uniforms is Beta(k, n + 1 - k).
    """
    shape = () if size is None else (size if isinstance(size, tuple) else (size,))
    draws = np.sort(rng.random(shape + (5,)), axis=-1)[..., 1]
    return float(draws) if size is None else draws


# centre -> share of the pool; the remainder is spread uniformly over [0, 1]
_CPCS_MIXTURE = ((0.0, 0.27), (0.2, 0.17), (0.5, 0.14), (0.8, 0.12), (1.0, 0.24))
_CPCS_POOL_SIZE = 1000
_CPCS_SPREAD = 0.015
_CPCS_POOL_SEED = 1995


@lru_cache(maxsize=1)
def synthetic_cpcs_pool() -> Tuple[float, ...]:
    """
    Built-in coefficient pool standing in for a real diagnostic network.

    About half the mass sits within 0.05 of 0 or 1, the rest clusters around
    0.2, 0.5 and 0.8, with a thin uniform background.
    """
    rng = np.random.default_rng(_CPCS_POOL_SEED)
    parts = []
    for centre, share in _CPCS_MIXTURE:
        count = int(round(share * _CPCS_POOL_SIZE))
        if centre == 0.0:
            parts.append(np.abs(rng.normal(0.0, _CPCS_SPREAD * 2 / 3, count)))
        elif centre == 1.0:
            parts.append(1.0 - np.abs(rng.normal(0.0, _CPCS_SPREAD * 2 / 3, count)))
        else:
            parts.append(rng.normal(centre, _CPCS_SPREAD, count))
    used = sum(p.size for p in parts)
    parts.append(rng.random(_CPCS_POOL_SIZE - used))
    pool = np.clip(np.concatenate(parts), 0.0, 1.0)
    return tuple(float(x) for x in np.sort(pool))


def _draw_values(rng: np.random.Generator, source, size: int) -> np.ndarray:
    if isinstance(source, UniformSource):
        return rng.uniform(source.lo, source.hi, size)
    return np.full(size, source.value)


def _draw_coeffs(rng: np.random.Generator, source, shape: Tuple[int, int]) -> np.ndarray:
    if isinstance(source, Beta24Source):
        return sample_beta_2_4(rng, shape)
    return rng.choice(np.asarray(source.values), size=shape, replace=True)


def generate_network(cfg: GeneratorConfig) -> Bn2oNetwork:
    """
    Args:
        cfg: sizes, value sources and seed

    Returns:
        Bn2oNetwork whose provenance records cfg, so the same file can be regenerated
    """
    rng = np.random.default_rng(cfg.seed)
    coeffs = _draw_coeffs(rng, cfg.coeff_source, (cfg.n_findings, cfg.n_diseases))
    priors = _draw_values(rng, cfg.prior_source, cfg.n_diseases)
    leaks = _draw_values(rng, cfg.leak_source, cfg.n_findings)
    logger.info(
        "generated %dx%d network (%s coefficients, seed %d)",
        cfg.n_diseases, cfg.n_findings, cfg.coeff_source.kind, cfg.seed,
    )
    provenance = {
        "generator": cfg.model_dump(mode="json"),
        "rng": "numpy.random.PCG64",
        "bn2o_version": __version__,
    }
    return Bn2oNetwork(priors=priors, leaks=leaks, coeffs=coeffs, provenance=provenance)
