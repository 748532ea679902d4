"""Command-line entry point for anosov-forge.

Every command writes a RunEnvelope (tool version, seed, full configuration,
result) as JSON, or raw columns for ``--format tsv`` where a command has a
tabular form. Exit codes: 0 success, 1 a check failed or a search ran out
and the output carries the witness or trace, 2 usage, input or precondition
error.
"""

import argparse
import json
import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np
import structlog
from pydantic import BaseModel

from . import __version__
from .catalog import CatalogEntry, load_entry, names, verify_entry
from .config import settings
from .errors import ForgeError, HypothesisError, SearchExhaustedError, ValidationError
from .exactlinalg import RatMat
from .flagdyn import coverage_schedule, limit_set_sample, sample_tsv
from .freegroup import Word, finite_index_generators, parse_word
from .models import (
    CatalogEntryModel,
    CertificateResult,
    CommandSpec,
    CommandSummary,
    ConeBall,
    RunEnvelope,
)
from .perturb import (
    compensated_path,
    genericity_adjust,
    planted_instance,
    rho_k_destabilize,
    solve_incidence,
    unipotent_commutator,
)
from .pingpong import certify_condition_star, find_power, qi_bound_check
from .represent import (
    Representation,
    anosov_gap_profile,
    profile_tsv,
    qi_profile,
    sample_profile,
    unipotent_scan,
)
from .suspension import (
    Suspension,
    balance_scaling,
    dfb_evidence,
    find_balanced_word,
    lahn_ratio,
    rebase,
    tau_iteration,
)

logger = structlog.get_logger(__name__)


def _arg(*flags: str, **kwargs: Any) -> dict[str, Any]:
    return {"flags": list(flags), **kwargs}


# Command definitions
COMMANDS: dict[str, dict[str, Any]] = {
    "qi-profile": {
        "category": "growth",
        "description": "Per-length minima of log s1 over reduced words",
        "parameters": [
            _arg("--samples", type=int, default=None, help="Random words per length"),
        ],
        "examples": ["catalog schottky | qi-profile --input - --max-length 6"],
    },
    "anosov-profile": {
        "category": "growth",
        "description": "Per-length minima of log s1 - log s2 over reduced words",
        "parameters": [
            _arg("--samples", type=int, default=None, help="Random words per length"),
        ],
        "examples": ["anosov-profile --entry schottky --format tsv"],
    },
    "scan-unipotent": {
        "category": "growth",
        "description": "Words with unipotent non-identity image; exit 1 if any",
        "parameters": [],
        "examples": ["scan-unipotent --entry rho2 --max-length 4"],
    },
    "lahn": {
        "category": "suspension",
        "description": "Infimum of log lambda_u / |phi| over a ball of words",
        "parameters": [],
        "examples": ["lahn --entry barbot --max-length 8"],
    },
    "dfb-evidence": {
        "category": "suspension",
        "description": "Finite-depth evidence that a suspension is derived from Barbot",
        "parameters": [],
        "examples": ["dfb-evidence --entry lahn"],
    },
    "certify-pingpong": {
        "category": "pingpong",
        "description": "Condition-(*) certificate for stored cones or a certified power",
        "parameters": [
            _arg("--parity", choices=["odd", "any"], default="odd"),
            _arg("--power-max", type=int, default=None, help="Largest power tried"),
        ],
        "examples": ["catalog rho2 | certify-pingpong --input - --parity odd"],
    },
    "find-power": {
        "category": "pingpong",
        "description": "Least certified power of (f, g), then the exhaustive QI bound",
        "parameters": [
            _arg("--parity", choices=["odd", "any"], default="odd"),
            _arg("--power-max", type=int, default=None, help="Largest power tried"),
        ],
        "examples": ["find-power --entry rho2 --max-length 6"],
    },
    "perturb-unipotent": {
        "category": "perturb",
        "description": "Perturb a and b keeping a^m b^n fixed until a commutator is unipotent",
        "parameters": [
            _arg("--a", type=int, default=1, help="Index of the rotated generator"),
            _arg("--b", type=int, default=2, help="Index of the compensating generator"),
            _arg("--m", type=int, default=1),
            _arg("--n", type=int, default=1),
            _arg("--q", type=int, default=1, help="Power of omega in the commutator"),
            _arg("--amplitude", type=float, default=None),
            _arg("--p-max", type=int, default=None),
        ],
        "examples": ["perturb-unipotent", "perturb-unipotent --amplitude 0.05"],
    },
    "destabilize-rhok": {
        "category": "perturb",
        "description": "Unipotent witness near a finite-index restriction rho_k",
        "parameters": [
            _arg("--q", type=int, default=None, help="Scalar power of c3"),
            _arg(
                "--approach-tol", type=float, default=None,
                help="Largest accepted distance from gamma.P0 to the scalar plane",
            ),
        ],
        "examples": [
            "destabilize-rhok --entry rho3 --max-length 8",
            "destabilize-rhok --entry rho3 --max-length 4 --approach-tol 0.1",
        ],
    },
    "tau-iterate": {
        "category": "suspension",
        "description": "Steer a basis (a, b) until b leaves V and V^-1",
        "parameters": [
            _arg("--word-a", default="a", help="Space-separated word, capitals invert"),
            _arg("--word-b", default="b"),
            _arg("--max-iter", type=int, default=None),
        ],
        "examples": ["tau-iterate --entry lahn"],
    },
    "balance": {
        "category": "suspension",
        "description": "Tau iteration, then rescale a so lambda_1 = lambda_perp on a^m b^n",
        "parameters": [
            _arg("--word-a", default="a"),
            _arg("--word-b", default="b"),
        ],
        "examples": ["balance --entry lahn"],
    },
    "flags-coverage": {
        "category": "flags",
        "description": "Limit-set sample and its coverage of the flag grid",
        "parameters": [
            _arg("--eta", type=float, default=None, help="Grid step"),
            _arg("--delta", type=float, default=None, help="Coverage radius"),
        ],
        "examples": ["flags-coverage --entry rho2_minimal --max-length 5"],
    },
    "catalog": {
        "category": "catalog",
        "description": "Print a catalog entry, or verify its expected checks",
        "parameters": [
            _arg("name", nargs="?", default=None, help="Entry name; omit to list"),
            _arg("--verify", action="store_true"),
        ],
        "examples": ["catalog rho2", "catalog barbot --verify"],
    },
    "finite-index-generators": {
        "category": "catalog",
        "description": "Free basis of the index k-1 subgroup used by rho_k",
        "parameters": [_arg("--k", type=int, default=3)],
        "examples": ["finite-index-generators --k 4"],
    },
    "commands": {
        "category": "meta",
        "description": "List commands, optionally filtered by a pattern",
        "parameters": [_arg("pattern", nargs="?", default="")],
        "examples": ["commands pingpong"],
    },
}


def discover_commands(pattern: str = "") -> list[CommandSummary]:
    """Commands whose name, category or description contains the pattern."""
    needle = pattern.lower()
    return [
        CommandSummary(name=name, description=spec["description"], category=spec["category"])
        for name, spec in COMMANDS.items()
        if needle in name
        or needle in spec["category"]
        or needle in spec["description"].lower()
    ]


def command_spec(name: str) -> CommandSpec:
    if name not in COMMANDS:
        raise ValidationError(f"Unknown command: {name}")
    spec = COMMANDS[name]
    return CommandSpec(
        name=name,
        description=spec["description"],
        category=spec["category"],
        parameters={
            p["flags"][0]: {k: v for k, v in p.items() if k != "flags"}
            for p in spec["parameters"]
        },
        examples=spec["examples"],
    )


def configure_logging() -> None:
    """Configure structured logging on stderr; stdout carries results."""
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, settings.log_level.upper(), logging.INFO),
        format="%(message)s",
    )
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.dev.ConsoleRenderer()
            if sys.stderr.isatty()
            else structlog.processors.JSONRenderer(),
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


# Inputs


def _read_input(path: str) -> Any:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        data = json.loads(text)
    except (OSError, UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ValidationError(f"cannot read input {path}: {e}") from e
    # A piped envelope carries its payload under "result"
    if isinstance(data, dict) and "command" in data and "result" in data:
        data = data["result"]
    return data


def load_subject(args: argparse.Namespace) -> CatalogEntry | Representation | Suspension:
    """The catalog entry, representation or suspension named by --entry/--input."""
    if args.entry:
        return load_entry(args.entry)
    if not args.input:
        raise ValidationError("this command needs --entry NAME or --input FILE")
    data = _read_input(args.input)
    if not isinstance(data, dict):
        raise ValidationError("input must be a JSON object")
    if "kind" in data and "data" in data:
        return CatalogEntry.from_model(CatalogEntryModel.model_validate(data))
    if "plane_parts" in data:
        return Suspension.from_json(data)
    if "images" in data:
        return Representation.from_json(data)
    raise ValidationError("input is neither a catalog entry, a representation nor a suspension")


def _representation(args: argparse.Namespace) -> Representation:
    subject = load_subject(args)
    if isinstance(subject, CatalogEntry):
        return subject.representation()
    if isinstance(subject, Suspension):
        raise ValidationError("this command needs a representation, got a suspension")
    return subject


def _suspension(args: argparse.Namespace) -> Suspension:
    subject = load_subject(args)
    if isinstance(subject, CatalogEntry):
        return subject.suspension()
    if not isinstance(subject, Suspension):
        raise ValidationError("this command needs a suspension")
    return subject


def _entry(args: argparse.Namespace) -> CatalogEntry:
    subject = load_subject(args)
    if not isinstance(subject, CatalogEntry):
        raise ValidationError("this command needs a catalog entry")
    return subject


# Handlers return (passed, result, tsv text or None)

Outcome = tuple[bool, Any, str | None]


def _profile(args: argparse.Namespace, kind: str) -> Outcome:
    rho = _representation(args)
    n = settings.max_length
    if args.samples:
        profile = sample_profile(rho, n, args.samples, kind, settings.seed)
    elif kind == "qi":
        profile = qi_profile(rho, n)
    else:
        profile = anosov_gap_profile(rho, n)
    return True, profile, profile_tsv(profile)


def _scan_unipotent(args: argparse.Namespace) -> Outcome:
    scan = unipotent_scan(_representation(args), settings.max_length)
    return not scan.witnesses, scan, None


def _lahn(args: argparse.Namespace) -> Outcome:
    result = lahn_ratio(_suspension(args), settings.max_length)
    return result.verdict == "anosov_consistent", result, None


def _dfb(args: argparse.Namespace) -> Outcome:
    report = dfb_evidence(_suspension(args), settings.max_length)
    return report.passed, report, None


def _partner_pair(entry: CatalogEntry) -> tuple[RatMat, RatMat] | None:
    if "f" in entry.params and "g" in entry.params:
        return RatMat.from_json(entry.params["f"]), RatMat.from_json(entry.params["g"])
    return None


def _certify(args: argparse.Namespace) -> Outcome:
    entry = _entry(args)
    pair = _partner_pair(entry)
    if pair is not None:
        found = find_power(pair[0], pair[1], args.parity, args.power_max)
        result = CertificateResult(success=True, certificate=found.certificate)
        return True, result, None
    if "cones" not in entry.params:
        raise ValidationError(f"entry {entry.name} has neither (f, g) nor stored cones")
    rho = entry.representation()
    mats: list[RatMat] = []
    for x in range(1, rho.rank + 1):
        mats += [rho.letter(x), rho.letter(-x)]
    cones = [[ConeBall(**b) for b in cone] for cone in entry.params["cones"]]
    result = certify_condition_star(
        entry.params["labels"],
        mats,
        cones,
        settings.expansion,
        entry.params["base_line"],
    )
    return result.success, result, None


def _find_power(args: argparse.Namespace) -> Outcome:
    entry = _entry(args)
    pair = _partner_pair(entry)
    if pair is None:
        raise ValidationError(f"entry {entry.name} carries no (f, g) pair")
    f, g = pair
    found = find_power(f, g, args.parity, args.power_max)
    certified = Representation([f**found.n, g**found.n], ["f", "g"])
    bound = qi_bound_check(certified, found.certificate, settings.max_length)
    return bound.passed, {"power": found.model_dump(), "qi_bound": bound.model_dump()}, None


def _perturb(args: argparse.Namespace) -> Outcome:
    if args.entry or args.input:
        rho = _representation(args)
        a, b, m, n, q = args.a, args.b, args.m, args.n, args.q
    else:
        setup = planted_instance()
        rho, a, b, m, n, q = setup.rho, setup.a, setup.b, setup.m, setup.n, setup.q
    images, adjusted = genericity_adjust(rho, a, b, m, n, q=q)
    path = compensated_path(images, a, b, m, n, args.amplitude, q)
    incidence = solve_incidence(path, args.p_max)
    witness = unipotent_commutator(path, incidence)
    result = {
        "genericity": adjusted.model_dump(),
        "incidence": incidence.model_dump(),
        "witness": witness.model_dump(),
    }
    return witness.accepted, result, None


def _destabilize(args: argparse.Namespace) -> Outcome:
    result = rho_k_destabilize(
        _representation(args), args.q, settings.max_length, approach_tol=args.approach_tol
    )
    return result.witness.accepted, result, None


def _words(args: argparse.Namespace, susp: Suspension) -> tuple[Word, Word]:
    return parse_word(args.word_a, susp.names), parse_word(args.word_b, susp.names)


def _tau(args: argparse.Namespace) -> Outcome:
    susp = _suspension(args)
    a, b = _words(args, susp)
    result = tau_iteration(susp, a, b, args.max_iter)
    return True, result, None


def _balance(args: argparse.Namespace) -> Outcome:
    susp = _suspension(args)
    a, b = _words(args, susp)
    tau = tau_iteration(susp, a, b)
    rebased = rebase(susp, [tuple(tau.final_a), tuple(tau.final_b)])
    m, n = find_balanced_word(rebased, (1,), (2,))
    result, _ = balance_scaling(rebased, (1,), (2,), m, n)
    return result.residual <= 1e-10, {"tau": tau.model_dump(), "balance": result.model_dump()}, None


def _flags(args: argparse.Namespace) -> Outcome:
    rho = _representation(args)
    n = settings.max_length
    report = coverage_schedule(rho, list(range(1, n + 1)), args.eta, args.delta)
    return True, report, sample_tsv(limit_set_sample(rho, n))


def _catalog(args: argparse.Namespace) -> Outcome:
    if args.name is None:
        return True, {"entries": names()}, "\n".join(names()) + "\n"
    entry = load_entry(args.name)
    if args.verify:
        report = verify_entry(entry)
        return report.passed, report, None
    return True, entry.to_model(), None


def _finite_index(args: argparse.Namespace) -> Outcome:
    return True, finite_index_generators(args.k), None


def _commands(args: argparse.Namespace) -> Outcome:
    found = discover_commands(args.pattern)
    return True, {"commands": [c.model_dump() for c in found], "total_count": len(found)}, None


HANDLERS: dict[str, Callable[[argparse.Namespace], Outcome]] = {
    "qi-profile": lambda args: _profile(args, "qi"),
    "anosov-profile": lambda args: _profile(args, "anosov_gap"),
    "scan-unipotent": _scan_unipotent,
    "lahn": _lahn,
    "dfb-evidence": _dfb,
    "certify-pingpong": _certify,
    "find-power": _find_power,
    "perturb-unipotent": _perturb,
    "destabilize-rhok": _destabilize,
    "tau-iterate": _tau,
    "balance": _balance,
    "flags-coverage": _flags,
    "catalog": _catalog,
    "finite-index-generators": _finite_index,
    "commands": _commands,
}


# Front end


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", default=None, help="JSON input file, '-' for stdin")
    common.add_argument("--entry", default=None, help="Catalog entry name")
    common.add_argument("--output", default=None, help="Write the output here")
    common.add_argument("--max-length", type=int, default=None)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--net", type=float, default=None, help="Ball net resolution")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--workers", type=int, default=None)
    common.add_argument("--format", choices=["json", "tsv"], default=None)

    parser = argparse.ArgumentParser(
        prog="anosov-forge",
        description="Finite-depth experiments on free subgroups of SL3",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        spec = command_spec(name)
        cmd = sub.add_parser(name, parents=[common], help=spec.description)
        for param in COMMANDS[name]["parameters"]:
            options = {k: v for k, v in param.items() if k != "flags"}
            cmd.add_argument(*param["flags"], **options)
    return parser


def apply_overrides(args: argparse.Namespace) -> None:
    """Copy CLI flags onto the global settings."""
    if args.max_length is not None:
        settings.max_length = args.max_length
    if args.tol is not None:
        settings.tolerance = args.tol
    if args.net is not None:
        settings.net_resolution = args.net
    if args.seed is not None:
        settings.seed = args.seed
    if args.workers is not None:
        settings.workers = args.workers
    if args.format is not None:
        settings.output_format = args.format


def _dump(result: Any) -> Any:
    return result.model_dump(mode="json") if isinstance(result, BaseModel) else result


def run_command(name: str, args: argparse.Namespace) -> tuple[int, str]:
    """Dispatch one command; returns the exit code and the text to write."""
    logger.info("running_command", command=name)
    try:
        passed, result, tsv = HANDLERS[name](args)
    except SearchExhaustedError as exc:
        logger.error("command_failed", command=name, error=str(exc))
        return 1, _envelope(name, False, {"trace": exc.trace}, str(exc))
    except HypothesisError as exc:
        logger.error("command_rejected", command=name, error=str(exc))
        return 2, _envelope(name, False, {"check": exc.check}, str(exc))
    except ForgeError as exc:
        logger.error("command_rejected", command=name, error=str(exc))
        return 2, _envelope(name, False, None, str(exc))
    except np.linalg.LinAlgError as exc:
        logger.error("command_rejected", command=name, error=str(exc))
        return 2, _envelope(name, False, None, f"numerical failure: {exc}")
    if settings.output_format == "tsv" and tsv is not None:
        return (0 if passed else 1), tsv
    message = None if passed else "check failed; see result for the witness"
    return (0 if passed else 1), _envelope(name, passed, _dump(result), message)


def _envelope(name: str, success: bool, result: Any, message: str | None) -> str:
    envelope = RunEnvelope(
        version=__version__,
        command=name,
        seed=settings.seed,
        config=settings.model_dump(mode="json"),
        success=success,
        result=result,
        message=message,
    )
    return envelope.model_dump_json(indent=2) + "\n"


def main(argv: list[str] | None = None) -> int:
    """Main entry point."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    apply_overrides(args)
    configure_logging()
    code, text = run_command(args.command, args)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
