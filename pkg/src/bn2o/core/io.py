"""
JSON file formats for networks and evidence, plus atomic writes.

Network file:
    {"n_diseases": int, "n_findings": int, "priors": [...], "leaks": [...],
     "coeffs": [[...], ...]}          # coeffs[finding][disease]
Evidence file:
    {"positive": [int, ...], "negative": [int, ...]}
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..errors import InvalidInputError
from .network import Bn2oNetwork, Evidence

PathLike = Union[str, Path]


class NetworkFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_diseases: int = Field(ge=1)
    n_findings: int = Field(ge=1)
    priors: List[float]
    leaks: List[float]
    coeffs: List[List[float]]
    provenance: Optional[Dict[str, Any]] = None

    @model_validator(mode="after")
    def _check_shape(self) -> "NetworkFile":
        if len(self.priors) != self.n_diseases:
            raise ValueError(f"priors has {len(self.priors)} entries, n_diseases is {self.n_diseases}")
        if len(self.leaks) != self.n_findings:
            raise ValueError(f"leaks has {len(self.leaks)} entries, n_findings is {self.n_findings}")
        if len(self.coeffs) != self.n_findings or any(len(row) != self.n_diseases for row in self.coeffs):
            raise ValueError("coeffs must be n_findings rows of n_diseases values")
        for name, values in (("priors", self.priors), ("leaks", self.leaks)):
            if any(not 0.0 <= v <= 1.0 for v in values):
                raise ValueError(f"{name} must lie in [0, 1]")
        if any(not 0.0 <= v <= 1.0 for row in self.coeffs for v in row):
            raise ValueError("coeffs must lie in [0, 1]")
        return self


class EvidenceFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    positive: List[int] = Field(default_factory=list)
    negative: List[int] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_disjoint(self) -> "EvidenceFile":
        if any(i < 0 for i in self.positive + self.negative):
            raise ValueError("finding indices must be non-negative")
        if set(self.positive) & set(self.negative):
            raise ValueError("positive and negative findings must be disjoint")
        return self


# ------------------------------------------------------------------
# Reading
# ------------------------------------------------------------------
def read_json(path: PathLike) -> Any:
    p = Path(path)
    try:
        with open(p, encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError:
        raise InvalidInputError(f"{p}: file not found")
    except json.JSONDecodeError as e:
        raise InvalidInputError(f"{p}: invalid JSON ({e})")
    except OSError as e:
        raise InvalidInputError(f"{p}: cannot read ({e})")


def read_config(path: PathLike) -> Dict[str, Any]:
    """Config files are JSON or YAML; JSON is read through the YAML loader."""
    p = Path(path)
    try:
        with open(p, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
    except FileNotFoundError:
        raise InvalidInputError(f"{p}: file not found")
    except yaml.YAMLError as e:
        raise InvalidInputError(f"{p}: invalid config ({e})")
    if not isinstance(data, dict):
        raise InvalidInputError(f"{p}: config must be a mapping")
    return data


def load_network(path: PathLike) -> Bn2oNetwork:
    data = read_json(path)
    try:
        spec = NetworkFile.model_validate(data)
    except ValidationError as e:
        raise InvalidInputError(f"{path}: invalid network file\n{e}")
    return Bn2oNetwork(priors=spec.priors, leaks=spec.leaks, coeffs=spec.coeffs, provenance=spec.provenance or {})


def load_evidence(path: PathLike, net: Optional[Bn2oNetwork] = None) -> Evidence:
    data = read_json(path)
    try:
        spec = EvidenceFile.model_validate(data)
    except ValidationError as e:
        raise InvalidInputError(f"{path}: invalid evidence file\n{e}")
    evidence = Evidence.of(spec.positive, spec.negative)
    return evidence.validate_for(net) if net is not None else evidence


# ------------------------------------------------------------------
# Writing
# ------------------------------------------------------------------
def dumps(data: Any) -> str:
    # json uses repr() for floats, which round-trips binary64 exactly
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def write_atomic(path: PathLike, text: str) -> Path:
    """Write text to a temp file in the target directory, then rename over the target."""
    p = Path(path)
    try:
        p.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=f".{p.name}.", suffix=".tmp", dir=p.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
                f.write(text)
            os.replace(tmp, p)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise OSError(f"{p}: write failed ({e})") from e
    return p


def save_network(net: Bn2oNetwork, path: PathLike) -> Path:
    return write_atomic(path, dumps(net.to_dict()))


def save_evidence(evidence: Evidence, path: PathLike) -> Path:
    return write_atomic(path, dumps(evidence.to_dict()))
