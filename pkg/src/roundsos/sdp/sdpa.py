"""SDPA sparse input (``.dat-s``) and result files, and a file-based solver backend.

SDPA solves ``max <F0, Y>`` s.t. ``<Fi, Y> = c_i``, ``Y >= 0`` as its dual, so a
problem maps over as ``F0 = C``, ``Fi = A_i``, ``c = b``. In result files
``xVec`` is our ``y``, ``xMat`` our ``Z`` and ``yMat`` our ``X``.
"""

from __future__ import annotations

import hashlib
import re
import shutil
import subprocess
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import structlog

from roundsos.config.constants import SolveStatus, SolverBackend
from roundsos.core.exceptions import ConfigurationError, MalformedSolutionFile, ParseError
from roundsos.program.printer import format_decimal
from roundsos.sdp.problem import Entry, SdpProblem, SdpSolution, inner
from roundsos.sdp.solver import SolverParams, solve

logger = structlog.get_logger()

Solver = Callable[[SdpProblem, Optional[SolverParams]], SdpSolution]

_PHASES: dict[SolveStatus, str] = {
    SolveStatus.OPTIMAL: "pdOPT",
    SolveStatus.INFEASIBLE: "pdINF",
    SolveStatus.NUMERICAL_TROUBLE: "noINFO",
    SolveStatus.ITERATION_LIMIT: "pdFEAS",
}

_INFEASIBLE_PHASES = {"pdINF", "pFEAS_dINF", "pINF_dFEAS", "pUNBD", "dUNBD"}


def _terminates(value: Fraction) -> bool:
    return not format_decimal(value).startswith("(")


def _number(value: Fraction) -> str:
    if value.denominator == 1:
        return f"{value.numerator}.0"
    return format_decimal(value) if _terminates(value) else repr(float(value))


_EXACT = re.compile(r'^"exact (b (\d+)|(\d+) (\d+) (\d+) (\d+)) (-?\d+/\d+)\s*$')


def export_sdpa_sparse(problem: SdpProblem, comment: Optional[str] = None) -> str:
    """Write ``problem`` in SDPA sparse format.

    Terminating rationals are written exactly. Others are written as the
    nearest double, and their exact ``p/q`` goes into an ``"exact`` header
    comment that :func:`import_sdpa_sparse` reads back.
    """
    lines = []
    if comment:
        lines.extend(f'"{line}' for line in comment.splitlines())
    for k, v in enumerate(problem.b, start=1):
        if not _terminates(v):
            lines.append(f'"exact b {k} {v.numerator}/{v.denominator}')
    for matno, entries in enumerate((problem.c, *problem.a)):
        for block, i, j, value in entries:
            if value != 0 and not _terminates(value):
                lines.append(f'"exact {matno} {block + 1} {i + 1} {j + 1} {value.numerator}/{value.denominator}')
    lines.append(str(problem.m))
    lines.append(str(len(problem.block_sizes)))
    lines.append(" ".join(str(s) for s in problem.block_sizes))
    lines.append(" ".join(_number(v) for v in problem.b) if problem.b else "")
    for matno, entries in enumerate((problem.c, *problem.a)):
        for block, i, j, value in entries:
            if value != 0:
                lines.append(f"{matno} {block + 1} {i + 1} {j + 1} {_number(value)}")
    return "\n".join(lines) + "\n"


def _exact(token: str, line: int) -> Fraction:
    try:
        return Fraction(Decimal(token))
    except InvalidOperation as e:
        raise ParseError(f"bad number {token!r}", line=line) from e


def import_sdpa_sparse(text: str) -> SdpProblem:
    """Read SDPA sparse format; comment lines start with ``"`` or ``*``.

    ``"exact`` comments written by :func:`export_sdpa_sparse` restore
    values that were rounded to doubles in the body.

    Raises:
        ParseError: on malformed headers or entries.
    """
    exact_b: dict[int, Fraction] = {}
    exact_entries: dict[tuple[int, int, int, int], Fraction] = {}
    for line in text.splitlines():
        hit = _EXACT.match(line.strip())
        if hit is None:
            continue
        value = Fraction(hit.group(7))
        if hit.group(2) is not None:
            exact_b[int(hit.group(2)) - 1] = value
        else:
            matno, blkno, i, j = (int(hit.group(k)) for k in range(3, 7))
            exact_entries[(matno, blkno, *sorted((i, j)))] = value

    rows = [
        (no, re.sub(r"[,{}()]", " ", line).split())
        for no, line in enumerate(text.splitlines(), start=1)
        if line.strip() and line.lstrip()[0] not in "\"*"
    ]
    if len(rows) < 3:
        raise ParseError("SDPA file ends before its header")
    try:
        m = int(rows[0][1][0])
        nblocks = int(rows[1][1][0])
    except (IndexError, ValueError) as e:
        raise ParseError("bad SDPA header", line=rows[0][0]) from e
    sizes: list[int] = []
    pos = 2
    while len(sizes) < nblocks:
        if pos >= len(rows):
            raise ParseError("SDPA file ends inside block sizes")
        sizes.extend(int(t) for t in rows[pos][1])
        pos += 1
    rhs: list[Fraction] = []
    while len(rhs) < m:
        if pos >= len(rows):
            raise ParseError("SDPA file ends inside the right-hand side")
        rhs.extend(_exact(t, rows[pos][0]) for t in rows[pos][1])
        pos += 1
    rhs = [exact_b.get(k, v) for k, v in enumerate(rhs)]
    mats: list[list[Entry]] = [[] for _ in range(m + 1)]
    for no, tokens in rows[pos:]:
        if len(tokens) != 5:
            raise ParseError("entry needs 5 fields", line=no)
        matno, blkno, i, j = (int(t) for t in tokens[:4])
        if not 0 <= matno <= m:
            raise ParseError(f"matrix number {matno} out of range", line=no)
        lo, hi = sorted((i, j))
        value = exact_entries.get((matno, blkno, lo, hi)) or _exact(tokens[4], no)
        mats[matno].append((blkno - 1, lo - 1, hi - 1, value))
    return SdpProblem(
        block_sizes=tuple(sizes[:nblocks]),
        c=tuple(mats[0]),
        a=tuple(tuple(e) for e in mats[1:]),
        b=tuple(rhs[:m]),
    )


# Result files


def _block_text(block: np.ndarray, diagonal: bool) -> str:
    if diagonal:
        return "{" + ",".join(f"{v:+.16e}" for v in np.diag(block)) + "}"
    rows = ["{" + ",".join(f"{v:+.16e}" for v in row) + "}" for row in block]
    return "{\n" + ",\n".join(rows) + "}"


def format_sdpa_solution(sol: SdpSolution, block_sizes: Optional[tuple[int, ...]] = None) -> str:
    """SDPA result layout: phase, objective values and the ``xVec``/``xMat``/``yMat`` dumps."""
    sizes = block_sizes or tuple(len(x) for x in sol.x)

    def mats(blocks: list[np.ndarray]) -> str:
        return "{\n" + "\n".join(_block_text(b, s < 0) for b, s in zip(blocks, sizes)) + "\n}"

    return "\n".join(
        [
            f"phase.value  = {_PHASES[sol.status]}",
            f"   Iteration = {sol.iterations}",
            f"objValPrimal = {sol.dual_objective:+.16e}",
            f"objValDual   = {sol.primal_objective:+.16e}",
            "xVec = ",
            "{" + ",".join(f"{v:+.16e}" for v in sol.y) + "}",
            "xMat = ",
            mats(sol.z),
            "yMat = ",
            mats(sol.x),
            "",
        ]
    )


def _nested(text: str, start: int) -> tuple[Any, int]:
    """Parse a brace-nested list of numbers beginning at ``text[start] == '{'``."""
    stack: list[list[Any]] = []
    token = ""
    pos = start
    while pos < len(text):
        ch = text[pos]
        if ch == "{":
            stack.append([])
        elif ch in ",}" or ch.isspace():
            if token:
                try:
                    stack[-1].append(float(token))
                except (ValueError, IndexError) as e:
                    raise MalformedSolutionFile(f"bad number {token!r} in solution") from e
                token = ""
            if ch == "}":
                done = stack.pop()
                if not stack:
                    return done, pos + 1
                stack[-1].append(done)
        else:
            token += ch
        pos += 1
    raise MalformedSolutionFile("solution file ends inside a brace block")


def _section(text: str, name: str) -> Any:
    match = re.search(rf"^\s*{name}\s*=\s*", text, re.MULTILINE)
    if match is None:
        raise MalformedSolutionFile(f"solution file has no {name}")
    brace = text.find("{", match.end())
    if brace < 0:
        raise MalformedSolutionFile(f"{name} has no data")
    value, _ = _nested(text, brace)
    return value


def _blocks(raw: Any, name: str) -> list[np.ndarray]:
    out = []
    for item in raw:
        if isinstance(item, list) and item and isinstance(item[0], list):
            try:
                matrix = np.array(item, dtype=float)
            except ValueError as e:
                raise MalformedSolutionFile(f"{name} block has ragged rows") from e
            if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
                raise MalformedSolutionFile(f"{name} block is not square")
            out.append(matrix)
        elif isinstance(item, list):
            out.append(np.diag(np.array(item, dtype=float)))
        else:
            out.append(np.array([[float(item)]]))
    return out


def _scalar(text: str, name: str) -> float:
    match = re.search(rf"^\s*{name}\s*=\s*(\S+)", text, re.MULTILINE)
    if match is None:
        return float("nan")
    try:
        return float(match.group(1))
    except ValueError as e:
        raise MalformedSolutionFile(f"bad {name} value") from e


def parse_sdpa_solution(text: str, problem: Optional[SdpProblem] = None) -> SdpSolution:
    """Read an SDPA result file; with ``problem`` the dimensions are checked.

    Raises:
        MalformedSolutionFile: if a section is missing, truncated or misshaped.
    """
    phase = re.search(r"phase\.value\s*=\s*(\w+)", text)
    if phase is None:
        raise MalformedSolutionFile("solution file has no phase.value")
    name = phase.group(1)
    if name == "pdOPT":
        status = SolveStatus.OPTIMAL
    elif name in _INFEASIBLE_PHASES:
        status = SolveStatus.INFEASIBLE
    elif name == "pdFEAS":
        status = SolveStatus.ITERATION_LIMIT
    else:
        status = SolveStatus.NUMERICAL_TROUBLE
    y = np.array(_section(text, "xVec"), dtype=float).ravel()
    z = _blocks(_section(text, "xMat"), "xMat")
    x = _blocks(_section(text, "yMat"), "yMat")
    if len(x) != len(z):
        raise MalformedSolutionFile("xMat and yMat have different block counts")
    dual = _scalar(text, "objValPrimal")
    primal = _scalar(text, "objValDual")
    if problem is not None:
        if len(y) != problem.m:
            raise MalformedSolutionFile(
                "xVec length does not match the problem",
                details={"expected": problem.m, "found": len(y)},
            )
        if tuple(len(b) for b in x) != problem.dims:
            raise MalformedSolutionFile("block sizes do not match the problem")
        primal = inner(problem.cost_blocks(), x)
        dual = float(problem.rhs() @ y)
    gap = abs(primal - dual) / (1 + abs(primal) + abs(dual))
    iterations = int(_scalar(text, "Iteration")) if re.search(r"Iteration\s*=\s*\d", text) else 0
    return SdpSolution(
        status=status,
        x=x,
        y=y,
        z=z,
        primal_objective=primal,
        dual_objective=dual,
        gap=gap,
        iterations=iterations,
        message=f"phase {name}",
    )


class SdpaFileBridge:
    """Solve through files in ``directory`` named by the problem's digest.

    Runs ``executable`` when it is on the path, otherwise reads a result file
    left there beforehand. Without either the solve reports numerical trouble.
    """

    def __init__(self, directory: Path, executable: str = "sdpa", timeout: float = 600.0) -> None:
        self.directory = Path(directory)
        self.executable = executable
        self.timeout = timeout

    def paths(self, problem: SdpProblem) -> tuple[Path, Path]:
        text = export_sdpa_sparse(problem)
        digest = hashlib.sha256(text.encode()).hexdigest()[:16]
        return self.directory / f"{digest}.dat-s", self.directory / f"{digest}.out"

    def __call__(self, problem: SdpProblem, params: Optional[SolverParams] = None) -> SdpSolution:
        self.directory.mkdir(parents=True, exist_ok=True)
        dat, out = self.paths(problem)
        dat.write_text(export_sdpa_sparse(problem))
        exe = shutil.which(self.executable)
        if exe is not None and not out.exists():
            try:
                subprocess.run(
                    [exe, "-ds", str(dat), "-o", str(out)],
                    check=True,
                    capture_output=True,
                    timeout=self.timeout,
                )
            except (subprocess.SubprocessError, OSError) as e:
                logger.warning("SDPA run failed", problem=dat.name, error=str(e))
                return SdpSolution.failed(problem, SolveStatus.NUMERICAL_TROUBLE, f"sdpa failed: {e}")
        if not out.exists():
            logger.warning("No SDPA result available", expected=str(out))
            return SdpSolution.failed(problem, SolveStatus.NUMERICAL_TROUBLE, "no solver output")
        try:
            solution = parse_sdpa_solution(out.read_text(), problem)
        except MalformedSolutionFile as e:
            logger.warning("Unreadable SDPA result", path=str(out), error=e.message)
            return SdpSolution.failed(problem, SolveStatus.NUMERICAL_TROUBLE, e.message)
        logger.info("Read SDPA result", path=out.name, status=solution.status.value)
        return solution


def make_solver(spec: str, executable: str = "sdpa") -> Solver:
    """Backend from ``embedded`` or ``sdpa-files:<dir>``.

    Raises:
        ConfigurationError: on an unknown backend name or a missing directory.
    """
    name, _, arg = spec.partition(":")
    if name == SolverBackend.EMBEDDED.value:
        return solve
    if name == SolverBackend.SDPA_FILES.value:
        if not arg:
            raise ConfigurationError("sdpa-files backend needs a directory, as sdpa-files:<dir>")
        return SdpaFileBridge(Path(arg), executable)
    raise ConfigurationError(f"unknown solver backend {spec!r}", details={"backend": spec})
