"""Block-diagonal SDP problems and solutions.

Problems are stored in the standard primal form

    maximize <C, X>  subject to  <A_i, X> = b_i,  X >= 0 (block-diagonal PSD)

whose dual is ``minimize b^T y`` subject to ``Z = sum y_i A_i - C >= 0``.
Data is kept as exact rationals; solvers convert to floating point.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from roundsos.config.constants import SolveStatus
from roundsos.core.exceptions import SolverError

# (block, row, col, value) with 0-based row <= col
Entry = tuple[int, int, int, Fraction]


@dataclass(frozen=True)
class SdpProblem:
    """Sparse symmetric data; a negative block size marks a diagonal block."""

    block_sizes: tuple[int, ...]
    c: tuple[Entry, ...]
    a: tuple[tuple[Entry, ...], ...]
    b: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if len(self.a) != len(self.b):
            raise SolverError(
                "constraint count does not match right-hand side",
                details={"constraints": len(self.a), "rhs": len(self.b)},
            )
        for entries in (self.c, *self.a):
            for block, i, j, _ in entries:
                if not 0 <= block < len(self.block_sizes):
                    raise SolverError("entry refers to a missing block", details={"block": block})
                size = self.block_sizes[block]
                if not (0 <= i <= j < abs(size)):
                    raise SolverError(
                        "entry outside the upper triangle of its block",
                        details={"block": block, "row": i, "col": j},
                    )
                if size < 0 and i != j:
                    raise SolverError("off-diagonal entry in a diagonal block", details={"block": block})

    @property
    def m(self) -> int:
        return len(self.b)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(abs(s) for s in self.block_sizes)

    def dense(self, entries: Iterable[Entry]) -> list[np.ndarray]:
        """Symmetric float blocks for a sparse matrix."""
        blocks = [np.zeros((s, s)) for s in self.dims]
        for block, i, j, value in entries:
            v = float(value)
            blocks[block][i, j] += v
            if i != j:
                blocks[block][j, i] += v
        return blocks

    def cost_blocks(self) -> list[np.ndarray]:
        return self.dense(self.c)

    def constraint_tensors(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Per block: the constraint indices touching it and their stacked dense matrices."""
        touching: list[dict[int, list[Entry]]] = [{} for _ in self.block_sizes]
        for k, entries in enumerate(self.a):
            for entry in entries:
                touching[entry[0]].setdefault(k, []).append(entry)
        out = []
        for block, groups in enumerate(touching):
            s = self.dims[block]
            ids = np.array(sorted(groups), dtype=int)
            tensor = np.zeros((len(ids), s, s))
            for row, k in enumerate(ids):
                for _, i, j, value in groups[int(k)]:
                    v = float(value)
                    tensor[row, i, j] += v
                    if i != j:
                        tensor[row, j, i] += v
            out.append((ids, tensor))
        return out

    def rhs(self) -> np.ndarray:
        return np.array([float(v) for v in self.b])


def inner(a: Sequence[np.ndarray], b: Sequence[np.ndarray]) -> float:
    return float(sum(np.vdot(x, y) for x, y in zip(a, b)))


@dataclass
class SdpSolution:
    """Primal blocks ``x``, dual vector ``y`` and dual slack blocks ``z``."""

    status: SolveStatus
    x: list[np.ndarray]
    y: np.ndarray
    z: list[np.ndarray]
    primal_objective: float
    dual_objective: float
    gap: float = float("nan")
    iterations: int = 0
    message: Optional[str] = None
    extras: dict[str, float] = field(default_factory=dict)

    @property
    def is_optimal(self) -> bool:
        return self.status == SolveStatus.OPTIMAL

    def acceptable(self, tol: float) -> bool:
        """Optimal, or stalled with gap and infeasibilities all below ``tol``."""
        if self.is_optimal:
            return True
        if self.status == SolveStatus.INFEASIBLE:
            return False
        measures = (
            self.gap,
            self.extras.get("primal_infeasibility", float("inf")),
            self.extras.get("dual_infeasibility", float("inf")),
        )
        return all(np.isfinite(v) and v <= tol for v in measures)

    @classmethod
    def failed(cls, problem: SdpProblem, status: SolveStatus, message: str) -> SdpSolution:
        blocks = [np.zeros((s, s)) for s in problem.dims]
        return cls(
            status=status,
            x=blocks,
            y=np.zeros(problem.m),
            z=[b.copy() for b in blocks],
            primal_objective=float("nan"),
            dual_objective=float("nan"),
            message=message,
        )
