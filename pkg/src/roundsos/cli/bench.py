"""Run the benchmark suite concurrently."""

from __future__ import annotations

import asyncio
import time
from pathlib import Path
from typing import Optional

import structlog

from roundsos.cli.models import BenchRow, BenchTable
from roundsos.cli.sampling import sample_error
from roundsos.config.constants import reference_for
from roundsos.core.exceptions import RoundSosError
from roundsos.engine.analyze import analyze
from roundsos.engine.options import EngineOptions
from roundsos.program.parser import parse_program

logger = structlog.get_logger()

SUFFIX = ".prog"


def suite_files(suite_dir: Path) -> list[Path]:
    """Programs of the suite in a stable order."""
    return sorted(p for p in suite_dir.iterdir() if p.suffix == SUFFIX)


def run_one(path: Path, options: EngineOptions, samples: int, seed: int) -> BenchRow:
    """Analyze and sample one program; failures become an error row."""
    name = path.stem
    started = time.perf_counter()
    try:
        spec = parse_program(path.read_text())
        name = spec.name or name
        result = analyze(spec, options)
        fmt = spec.format or options.fmt
        sampled = (
            sample_error(
                spec,
                fmt,
                samples=samples,
                seed=seed,
                input_rounding=options.rounding.input_rounding,
                round_constants=options.rounding.round_constants,
            ).lower_bound
            if samples
            else None
        )
    except RoundSosError as e:
        logger.error("Benchmark failed", benchmark=name, error=e.message)
        return BenchRow(benchmark=name, error=f"{type(e).__name__}: {e.message}").with_reference(
            reference_for(name)
        )
    except Exception as e:
        logger.exception("Benchmark crashed", benchmark=name)
        return BenchRow(benchmark=name, error=f"{type(e).__name__}: {e}").with_reference(reference_for(name))
    row = BenchRow(
        benchmark=name,
        bound=float(result.bound),
        sampled=float(sampled) if sampled is not None else None,
        sound=None if sampled is None else sampled <= result.bound,
        wall_time=round(time.perf_counter() - started, 3),
        fallbacks=len(result.fallbacks),
    )
    return row.with_reference(reference_for(name))


async def run_bench(
    suite_dir: Path,
    options: EngineOptions,
    samples: int = 0,
    seed: int = 0,
    workers: int = 4,
    only: Optional[list[str]] = None,
) -> BenchTable:
    """Analyze every program of ``suite_dir`` with at most ``workers`` running at once.

    Rows come back in file order whatever the completion order.
    """
    files = suite_files(suite_dir)
    if only:
        wanted = {w.lower() for w in only}
        files = [f for f in files if f.stem.lower() in wanted]
    semaphore = asyncio.Semaphore(workers)

    async def bounded(path: Path) -> BenchRow:
        async with semaphore:
            logger.info("Running benchmark", file=path.name)
            return await asyncio.to_thread(run_one, path, options, samples, seed)

    rows = await asyncio.gather(*(bounded(p) for p in files))
    logger.info("Benchmark suite finished", programs=len(rows), failures=sum(r.error is not None for r in rows))
    return BenchTable(rows=list(rows))
