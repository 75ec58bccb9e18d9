"""
bn2o command line.

    python -m bn2o.app.main generate --n-diseases 12 --n-findings 12 --seed 7 --out net.json
    python -m bn2o.app.main reduce net.json --policy dmax:4 --out model.json
    python -m bn2o.app.main infer model.json evidence.json --engine aggregate
    python -m bn2o.app.main sweep net.json --policy dmax:3 --policy dmax:6 --out results/
    python -m bn2o.app.main similar net.json 0011 0101 --tol 1e-9
    python -m bn2o.app.main scaling net.json --policy dmax:2 --policy dmax:6

Structured results go to stdout as JSON, status lines and diagnostics to
stderr. Exit codes: 0 ok, 1 invalid input, 2 infeasible (cap or budget),
3 impossible evidence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, TextIO, Union

import numpy as np

# Allow running this file directly from a source checkout
sys.path.append(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))

from bn2o import __version__  # noqa: E402
from bn2o.config import get_settings  # noqa: E402
from bn2o.core.inference import exact_posteriors  # noqa: E402
from bn2o.core.io import load_evidence, load_network, read_config, save_network  # noqa: E402
from bn2o.core.network import Bn2oNetwork, Evidence  # noqa: E402
from bn2o.errors import (  # noqa: E402
    Bn2oError,
    ImpossibleEvidenceError,
    InconsistentBaseStateError,
    InfeasibleComputationError,
    InvalidInputError,
)
from bn2o.experiments.generator import (  # noqa: E402
    GeneratorConfig,
    PoolSource,
    generate_network,
    generator_config_from_dict,
)
from bn2o.experiments.report import emit_report  # noqa: E402
from bn2o.experiments.scaling import inference_scaling  # noqa: E402
from bn2o.experiments.sweep import SweepConfig, error_sweep, sweep_config_from_dict  # noqa: E402
from bn2o.logs import setup_logging  # noqa: E402
from bn2o.reduction.aggregation import (  # noqa: E402
    AggregatedModel,
    abstraction_posteriors,
    aggregated_posteriors,
    build_aggregated_model,
    load_artifact,
    save_model,
)
from bn2o.reduction.base_states import parse_policy, select_base_states  # noqa: E402
from bn2o.reduction.similarity import (  # noqa: E402
    DEFAULT_SIMILARITY_TOL,
    column_distance,
    likelihood_ratio_invariant,
    states_similar,
)

logger = logging.getLogger("bn2o.app")

NETWORK_ENGINES = ("brute", "quickscore", "negative")
MODEL_ENGINES = ("aggregate", "abstract")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_INFEASIBLE = 2
EXIT_IMPOSSIBLE = 3


# ------------------------------------------------------------------
# Commands
# ------------------------------------------------------------------
@dataclass
class Generate:
    config: GeneratorConfig
    out: Path


@dataclass
class Reduce:
    network: Path
    policy: object
    out: Path


@dataclass
class Infer:
    artifact: Path
    evidence: Path
    engine: Optional[str] = None


@dataclass
class Sweep:
    network: Path
    config: SweepConfig
    out: Path
    budget: Optional[str] = None
    workers: Optional[int] = None
    timing: bool = False


@dataclass
class SimilarCheck:
    network: Path
    state_a: str
    state_b: str
    tol: float = DEFAULT_SIMILARITY_TOL
    ratio: bool = False


@dataclass
class Scaling:
    network: Path
    policies: List[object] = field(default_factory=list)
    evidence_count: int = 256
    repeats: int = 5
    seed: int = 0


Command = Union[Generate, Reduce, Infer, Sweep, SimilarCheck, Scaling]


# ------------------------------------------------------------------
# Argument parsing
# ------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bn2o", description="BN2O noisy-OR inference and state-space reduction")
    parser.add_argument("--version", action="version", version=f"bn2o {__version__}")
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING, ... (default BN2O_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a random BN2O network")
    p.add_argument("--config", type=Path, help="JSON/YAML generator config")
    p.add_argument("--n-diseases", type=int)
    p.add_argument("--n-findings", type=int)
    p.add_argument("--coeffs", choices=["beta24", "cpcs"], help="Beta(2,4) or the built-in CPCS-like pool")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("reduce", help="build the aggregated model for a base-state policy")
    p.add_argument("network", type=Path)
    p.add_argument("--policy", required=True, help="dmax:K | lambda:X | explicit:FILE")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("infer", help="posterior disease probabilities for one evidence file")
    p.add_argument("artifact", type=Path, help="network or reduced-model file")
    p.add_argument("evidence", type=Path)
    p.add_argument("--engine", choices=NETWORK_ENGINES + MODEL_ENGINES)

    p = sub.add_parser("sweep", help="exhaustive error sweep, writes report.csv / curves.csv / meta.json")
    p.add_argument("network", type=Path)
    p.add_argument("--config", type=Path, help="JSON/YAML sweep config")
    p.add_argument("--policy", action="append", default=[], help="repeatable; replaces the config's reductions")
    p.add_argument("--engine", choices=["brute", "quickscore"], help="exact engine (default: the budget's)")
    p.add_argument("--positive-up-to", type=int, metavar="K", help="only evidence with at most K positives")
    p.add_argument("--unobserved", choices=["absent", "negative"])
    p.add_argument("--budget", choices=["desk", "large"])
    p.add_argument("--workers", type=int)
    p.add_argument("--timing", action="store_true", help="fill wall_ms in report.csv")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("similar", help="compare two disease states")
    p.add_argument("network", type=Path)
    p.add_argument("state_a", help="bitstring, disease 0 leftmost")
    p.add_argument("state_b")
    p.add_argument("--tol", type=float, default=DEFAULT_SIMILARITY_TOL)
    p.add_argument("--ratio", action="store_true", help="also enumerate every finding instantiation")

    p = sub.add_parser("scaling", help="time aggregated inference against N_b + 1")
    p.add_argument("network", type=Path)
    p.add_argument("--policy", action="append", default=[], required=True)
    p.add_argument("--evidence-count", type=int, default=256)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _require_file(path: Path) -> Path:
    if not path.is_file():
        raise InvalidInputError(f"{path}: file not found")
    return path


def command_from_args(args: argparse.Namespace) -> Command:
    if args.command == "generate":
        data = read_config(_require_file(args.config)) if args.config else {}
        overrides = {
            "n_diseases": args.n_diseases,
            "n_findings": args.n_findings,
            "seed": args.seed,
        }
        data.update({k: v for k, v in overrides.items() if v is not None})
        if args.coeffs == "cpcs":
            data["coeff_source"] = PoolSource.cpcs_like().model_dump()
        elif args.coeffs == "beta24":
            data["coeff_source"] = {"kind": "beta24"}
        return Generate(generator_config_from_dict(data), args.out)

    if args.command == "reduce":
        return Reduce(_require_file(args.network), parse_policy(args.policy), args.out)

    if args.command == "infer":
        return Infer(_require_file(args.artifact), _require_file(args.evidence), args.engine)

    if args.command == "sweep":
        data = read_config(_require_file(args.config)) if args.config else {}
        if args.policy:
            data["reductions"] = [parse_policy(p).model_dump() for p in args.policy]
        if args.engine:
            data["exact_engine"] = args.engine
        if args.positive_up_to is not None:
            data["evidence_mode"] = {"kind": "positive_up_to", "k": args.positive_up_to}
        if args.unobserved:
            data["unobserved"] = args.unobserved
        if args.workers is not None and args.workers < 1:
            raise InvalidInputError("--workers must be at least 1")
        return Sweep(
            network=_require_file(args.network),
            config=sweep_config_from_dict(data),
            out=args.out,
            budget=args.budget,
            workers=args.workers,
            timing=args.timing,
        )

    if args.command == "similar":
        if args.tol < 0:
            raise InvalidInputError("--tol must be non-negative")
        return SimilarCheck(_require_file(args.network), args.state_a, args.state_b, args.tol, args.ratio)

    if args.command == "scaling":
        if args.evidence_count < 1 or args.repeats < 1:
            raise InvalidInputError("--evidence-count and --repeats must be at least 1")
        return Scaling(
            network=_require_file(args.network),
            policies=[parse_policy(p) for p in args.policy],
            evidence_count=args.evidence_count,
            repeats=args.repeats,
            seed=args.seed,
        )

    raise InvalidInputError(f"unknown command {args.command!r}")


# ------------------------------------------------------------------
# Execution
# ------------------------------------------------------------------
def _emit(out: TextIO, data) -> None:
    out.write(json.dumps(data, indent=2) + "\n")
    out.flush()


def _log_resolved(command: Command) -> None:
    settings = get_settings()
    resolved = {"command": type(command).__name__.lower()}
    for key, value in command.__dict__.items():
        if hasattr(value, "model_dump"):
            value = value.model_dump(mode="json")
        elif isinstance(value, Path):
            value = str(value)
        elif isinstance(value, list):
            value = [v.model_dump(mode="json") if hasattr(v, "model_dump") else v for v in value]
        resolved[key] = value
    resolved["settings"] = settings.model_dump()
    # the generator pool is long and already stored in the network file
    config = resolved.get("config")
    if isinstance(config, dict) and isinstance(config.get("coeff_source"), dict):
        source = config["coeff_source"]
        if "values" in source:
            config["coeff_source"] = {"kind": source["kind"], "n_values": len(source["values"])}
    logger.info("resolved config: %s", json.dumps(resolved, sort_keys=True))


def _infer(command: Infer) -> dict:
    artifact = load_artifact(command.artifact)
    if isinstance(artifact, AggregatedModel):
        engine = command.engine or "aggregate"
        if engine not in MODEL_ENGINES:
            raise InvalidInputError(
                f"engine '{engine}' needs a network file; {command.artifact} is a reduced model (use aggregate or abstract)"
            )
        evidence = load_evidence(command.evidence, artifact.source)
        if engine == "aggregate":
            result = aggregated_posteriors(artifact, evidence)
        else:
            result = abstraction_posteriors(artifact, evidence)
    else:
        engine = command.engine or "quickscore"
        if engine not in NETWORK_ENGINES:
            raise InvalidInputError(
                f"engine '{engine}' needs a reduced-model file; build one with 'bn2o reduce'"
            )
        evidence = load_evidence(command.evidence, artifact)
        result = exact_posteriors(artifact, evidence, engine)
    if evidence.is_empty:
        logger.warning("no findings observed in %s; posteriors are the priors", command.evidence)
    data = result.to_dict()
    data["evidence"] = evidence.to_dict()
    return data


def _scaling_evidence(net: Bn2oNetwork, count: int, seed: int) -> List[Evidence]:
    rng = np.random.default_rng(seed)
    draws = rng.random((count, net.n_findings))
    return [
        Evidence.of(np.flatnonzero(row < 0.25).tolist(), np.flatnonzero(row > 0.75).tolist())
        for row in draws
    ]


def execute(command: Command, out: TextIO) -> None:
    if isinstance(command, Generate):
        net = generate_network(command.config)
        path = save_network(net, command.out)
        _emit(out, {"out": str(path), "n_diseases": net.n_diseases, "n_findings": net.n_findings,
                    "seed": command.config.seed})

    elif isinstance(command, Reduce):
        net = load_network(command.network)
        base = select_base_states(net, command.policy)
        model = build_aggregated_model(net, base)
        path = save_model(model, command.out)
        _emit(out, {
            "out": str(path),
            "policy": command.policy.descriptor,
            "N_b": base.n_base,
            "fraction": base.fraction,
            "aggregate_prior": model.aggregate_prior,
            "degenerate": model.degenerate,
        })

    elif isinstance(command, Infer):
        _emit(out, _infer(command))

    elif isinstance(command, Sweep):
        net = load_network(command.network)
        report = error_sweep(net, command.config, budget=command.budget, workers=command.workers)
        paths = emit_report(report, command.out, timing=command.timing)
        _emit(out, {
            "n_evidence": report.n_evidence,
            "exact_skipped": report.exact_skipped,
            "exact_engine": report.exact_engine,
            "files": {k: str(v) for k, v in paths.items()},
        })

    elif isinstance(command, SimilarCheck):
        net = load_network(command.network)
        data = {
            "state_a": command.state_a,
            "state_b": command.state_b,
            "column_distance": column_distance(net, command.state_a, command.state_b),
            "similar": states_similar(net, command.state_a, command.state_b, command.tol),
        }
        if command.ratio:
            data["likelihood_ratio_invariant"] = likelihood_ratio_invariant(
                net, command.state_a, command.state_b, command.tol
            )
        _emit(out, data)

    elif isinstance(command, Scaling):
        net = load_network(command.network)
        evidence = _scaling_evidence(net, command.evidence_count, command.seed)
        report = inference_scaling(net, command.policies, evidence, repeats=command.repeats)
        _emit(out, report.to_dict())

    else:
        raise InvalidInputError(f"unsupported command {command!r}")


def run(command: Command, out: TextIO = sys.stdout) -> int:
    """Execute one command and map the outcome to an exit status."""
    _log_resolved(command)
    try:
        execute(command, out)
    except ImpossibleEvidenceError as e:
        print(f"[ERROR] impossible evidence: {e}", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    except InfeasibleComputationError as e:
        print(f"[ERROR] infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except InconsistentBaseStateError as e:
        print(f"[ERROR] inconsistent base states: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (Bn2oError, OSError) as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None, out: TextIO = sys.stdout) -> int:
    args = build_parser().parse_args(argv)
    try:
        setup_logging(args.log_level)
        command = command_from_args(args)
    except Bn2oError as e:
        print(f"[ERROR] {e}", file=sys.stderr)
        return EXIT_INVALID
    return run(command, out)


if __name__ == "__main__":
    sys.exit(main())
