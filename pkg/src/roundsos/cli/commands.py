"""Command-line interface: analyze, sample, bench and check."""

from __future__ import annotations

import argparse
import asyncio
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import structlog

from roundsos import __version__
from roundsos.certify.certificate import SosCertificate, format_bundle, parse_bundle
from roundsos.certify.check import check_bundle
from roundsos.cli.bench import run_bench
from roundsos.cli.models import (
    AnalysisResult,
    CheckReport,
    CheckSummary,
    RunRecord,
    SampleReport,
    rational_text,
)
from roundsos.cli.sampling import sample_error
from roundsos.config.constants import TOOL_NAME, ExitCode
from roundsos.config.settings import Settings, get_settings
from roundsos.core.exceptions import (
    ArityMismatch,
    ConfigurationError,
    EmptyBox,
    ParseError,
    RoundSosError,
)
from roundsos.core.logging import setup_logging
from roundsos.engine.analyze import analyze
from roundsos.engine.options import EngineOptions
from roundsos.program.parser import parse_program
from roundsos.program.spec import ProgramSpec
from roundsos.rounding.format import FpFormat

logger = structlog.get_logger()

# argparse destination -> settings field
OVERRIDES = {
    "order": "relaxation_order",
    "precision": "precision",
    "merge_errors": "merge_errors",
    "merge_bound": "merge_bound",
    "subdivide": "subdivide_budget",
    "solver": "solver_backend",
    "input_rounding": "input_rounding",
    "round_constants": "round_constants",
    "neg_error": "neg_error",
    "transc_factor": "transc_factor",
    "maxplus_points": "maxplus_points",
    "seed": "seed",
    "workers": "workers",
}

# Settings echoed into every run record
RECORDED = (
    "precision",
    "relaxation_order",
    "input_rounding",
    "round_constants",
    "neg_error",
    "merge_errors",
    "merge_bound",
    "transc_factor",
    "solver_backend",
    "gap_tol",
    "feas_tol",
    "max_iter",
    "maxplus_points",
    "max_errors_per_relaxation",
    "max_moment_variables",
    "subdivide_budget",
    "certificate_denominator_bits",
    "interval_precision_bits",
)

PARSE_ERRORS = (ParseError, ArityMismatch, EmptyBox, ConfigurationError)


def on_off(value: str) -> bool:
    """Parse an ``on``/``off`` switch."""
    lowered = value.strip().lower()
    if lowered in ("on", "yes", "true", "1"):
        return True
    if lowered in ("off", "no", "false", "0"):
        return False
    raise argparse.ArgumentTypeError(f"expected on or off, got {value!r}")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--precision", help="single, double, quad or a bit count")
    p.add_argument("--input-rounding", type=on_off, dest="input_rounding", metavar="on|off")
    p.add_argument("--round-constants", type=on_off, dest="round_constants", metavar="on|off")
    p.add_argument("--neg-error", type=on_off, dest="neg_error", metavar="on|off")


def _add_engine_flags(p: argparse.ArgumentParser) -> None:
    _add_model_flags(p)
    p.add_argument("-d", "--order", type=int, help="relaxation order (default: minimal)")
    p.add_argument("--merge-errors", action="store_true", default=None, dest="merge_errors")
    p.add_argument("--merge-bound", choices=["linear", "gamma"], dest="merge_bound")
    p.add_argument("--subdivide", type=int, metavar="BUDGET", help="maximum number of boxes")
    p.add_argument("--solver", help="embedded or sdpa-files:<dir>")
    p.add_argument("--transc-factor", dest="transc_factor", help="error factor of transcendental calls")
    p.add_argument("--maxplus-points", type=int, dest="maxplus_points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Certified roundoff-error bounds via sparse sums of squares.",
    )
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {__version__}")
    parser.add_argument("--log-level", dest="log_level", help="DEBUG, INFO, WARNING or ERROR")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="bound the roundoff error of one program")
    p.add_argument("path", type=Path)
    _add_engine_flags(p)
    p.add_argument("--certify", action="store_true", help="extract and check SOS certificates")
    p.add_argument("--certificate-out", type=Path, dest="certificate_out")
    p.add_argument("--check", type=Path, metavar="CERT", help="also check a certificate file")
    p.add_argument("--samples", type=int, default=0, help="add a sampled lower bound")
    p.add_argument("--seed", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("sample", help="sampled lower bound on the roundoff error")
    p.add_argument("path", type=Path)
    _add_model_flags(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_sample)

    p = sub.add_parser("bench", help="run the benchmark suite")
    p.add_argument("suite_dir", type=Path)
    _add_engine_flags(p)
    p.add_argument("--certify", action="store_true")
    p.add_argument("--workers", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--only", nargs="+", metavar="NAME")
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_bench)

    p = sub.add_parser("check", help="check a certificate file")
    p.add_argument("cert", type=Path)
    p.add_argument(
        "--program",
        type=Path,
        help="re-derive objectives and constraints from this program (same flags as analyze)",
    )
    _add_engine_flags(p)
    p.add_argument("--json", action="store_true")
    p.set_defaults(handler=cmd_check)
    return parser


def effective_settings(args: argparse.Namespace, base: Optional[Settings] = None) -> Settings:
    """Settings with every flag given on the command line applied."""
    base = base or get_settings()
    updates = {
        field: getattr(args, dest)
        for dest, field in OVERRIDES.items()
        if getattr(args, dest, None) is not None
    }
    if updates.get("relaxation_order", 1) < 0 or updates.get("subdivide_budget", 1) < 1:
        raise ConfigurationError("order must be >= 0 and the subdivision budget >= 1", details=updates)
    return base.model_copy(update=updates)


def run_record(s: Settings) -> RunRecord:
    return RunRecord(solver=s.solver_backend, flags={name: getattr(s, name) for name in RECORDED})


def _emit(model: Any, as_json: bool) -> None:
    print(model.model_dump_json(indent=2) if as_json else model.render())


def cmd_analyze(args: argparse.Namespace) -> int:
    s = effective_settings(args)
    spec = parse_program(args.path.read_text())
    options = EngineOptions.from_settings(s, certify=args.certify or args.check is not None)

    started = time.perf_counter()
    result = analyze(spec, options)
    wall = time.perf_counter() - started
    stamped = [replace(c, benchmark=spec.name) for c in result.certificates]

    certificate_path: Optional[Path] = None
    if args.certify and stamped:
        certificate_path = args.certificate_out or args.path.with_suffix(".cert")
        certificate_path.write_text(format_bundle(stamped))
        logger.info("Wrote certificates", path=str(certificate_path), count=len(stamped))

    extra_checks = []
    if args.check is not None:
        extra_checks = check_bundle(parse_bundle(args.check.read_text()), expected=stamped)

    sampled = None
    if args.samples:
        sampled = sample_error(
            spec,
            spec.format or options.fmt,
            samples=args.samples,
            seed=s.seed,
            input_rounding=s.input_rounding,
            round_constants=s.round_constants,
        ).lower_bound

    report = AnalysisResult.from_bound(spec.name, result, wall)
    report = report.model_copy(
        update={
            "certificate_path": str(certificate_path) if certificate_path else None,
            "checks": report.checks + [CheckSummary.of(c) for c in extra_checks],
            "sampled_lower_bound": float(sampled) if sampled is not None else None,
            "run": run_record(s),
        }
    )
    _emit(report, args.json)

    if any(not c.trusted for c in extra_checks):
        logger.error("Certificate check failed", path=str(args.check))
        return ExitCode.ANALYSIS_FAILURE
    if sampled is not None and sampled > result.bound:
        logger.error(
            "Sampled error exceeds the bound",
            program=spec.name,
            sampled=float(sampled),
            bound=float(result.bound),
        )
        return ExitCode.ANALYSIS_FAILURE
    return ExitCode.SUCCESS


def cmd_sample(args: argparse.Namespace) -> int:
    s = effective_settings(args)
    spec = parse_program(args.path.read_text())
    fmt = spec.format or FpFormat.parse(s.precision, s.transc_factor)
    samples = args.samples if args.samples is not None else s.samples
    result = sample_error(
        spec,
        fmt,
        samples=samples,
        seed=s.seed,
        input_rounding=s.input_rounding,
        round_constants=s.round_constants,
    )
    _emit(
        SampleReport(
            benchmark=spec.name,
            lower_bound=float(result.lower_bound),
            lower_bound_exact=rational_text(result.lower_bound),
            samples=result.samples,
            trials=result.trials,
            seed=s.seed,
            reference=result.reference,
            run=run_record(s),
        ),
        args.json,
    )
    return ExitCode.SUCCESS


def cmd_bench(args: argparse.Namespace) -> int:
    s = effective_settings(args)
    if not args.suite_dir.is_dir():
        raise ConfigurationError(f"no such suite directory: {args.suite_dir}")
    options = EngineOptions.from_settings(s, certify=args.certify)
    table = asyncio.run(
        run_bench(
            args.suite_dir,
            options,
            samples=args.samples if args.samples is not None else s.samples,
            seed=s.seed,
            workers=s.workers,
            only=args.only,
        )
    )
    table = table.model_copy(update={"run": run_record(s)})
    _emit(table, args.json)
    if table.failed:
        return ExitCode.PARSE_ERROR
    if not table.sound:
        logger.error("Benchmark soundness check failed", unsound=[r.benchmark for r in table.rows if r.sound is False])
        return ExitCode.ANALYSIS_FAILURE
    return ExitCode.SUCCESS


def replay_certificates(spec: ProgramSpec, s: Settings) -> list[SosCertificate]:
    """Certificates a fresh certified analysis of ``spec`` produces under ``s``."""
    result = analyze(spec, EngineOptions.from_settings(s, certify=True))
    return [replace(c, benchmark=spec.name) for c in result.certificates]


def cmd_check(args: argparse.Namespace) -> int:
    s = effective_settings(args)
    bundle = parse_bundle(args.cert.read_text())
    expected = None
    if args.program is not None:
        spec = parse_program(args.program.read_text())
        expected = replay_certificates(spec, s)
        logger.info("Replayed analysis", program=spec.name, certificates=len(expected))
    report = CheckReport(
        path=str(args.cert),
        program=str(args.program) if args.program is not None else None,
        checks=[CheckSummary.of(c) for c in check_bundle(bundle, expected=expected)],
        run=run_record(s),
    )
    _emit(report, args.json)
    return ExitCode.SUCCESS if report.passed else ExitCode.ANALYSIS_FAILURE


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Parse ``argv``, run the command and map failures to exit codes."""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.log_level)
    handler: Callable[[argparse.Namespace], int] = args.handler
    try:
        return int(handler(args))
    except PARSE_ERRORS as e:
        logger.error("Invalid input", command=args.command, error=e.message, details=e.details)
        print(f"error: {e.message}", file=sys.stderr)
        return ExitCode.PARSE_ERROR
    except RoundSosError as e:
        logger.error("Analysis failed", command=args.command, error=e.message, details=e.details)
        print(f"error: {type(e).__name__}: {e.message}", file=sys.stderr)
        return ExitCode.ANALYSIS_FAILURE
    except OSError as e:
        logger.error("Cannot read input", command=args.command, error=str(e))
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.PARSE_ERROR
