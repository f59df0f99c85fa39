"""Box subdivision on top of the single-box bound."""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import structlog

from roundsos.core.exceptions import BudgetExhausted
from roundsos.engine.bound import input_set
from roundsos.engine.branches import bound_nlprog
from roundsos.engine.options import BoundResult, EngineOptions
from roundsos.interval import Interval
from roundsos.program.spec import ProgramSpec
from roundsos.relax.constraints import ConstraintSet

logger = structlog.get_logger()

TINY = Fraction(1, 2**60)

BoxBound = Callable[[ProgramSpec, EngineOptions, ConstraintSet], BoundResult]


def split_dimension(box: Sequence[Interval]) -> Optional[int]:
    """Index of the widest dimension relative to its magnitude, None when every side is a point."""
    best: Optional[int] = None
    best_width = Fraction(0)
    for i, iv in enumerate(box):
        if iv.is_point():
            continue
        rel = iv.width / max(iv.mag, TINY)
        if best is None or rel > best_width:
            best, best_width = i, rel
    return best


@dataclass(order=True)
class _Leaf:
    priority: Fraction
    seq: int
    box: tuple[Interval, ...] = field(compare=False)
    result: BoundResult = field(compare=False)


def _tighten(child: BoundResult, parent: BoundResult) -> BoundResult:
    """Intersect a child's enclosure with its parent's; both are sound on the child box."""
    child.interval = child.interval.intersect(parent.interval) or child.interval
    return child


def merge_leaves(leaves: Sequence[BoundResult]) -> BoundResult:
    """Hull of the leaf enclosures with every certificate and fallback collected."""
    result = BoundResult(interval=leaves[0].interval, boxes=len(leaves))
    for leaf in leaves:
        result.interval = result.interval.hull(leaf.interval)
        result.linear = result.linear.hull(leaf.linear)
        result.remainder = result.remainder.hull(leaf.remainder)
        result.constant = result.constant.hull(leaf.constant)
        result.errors = max(result.errors, leaf.errors)
        result.absorb(leaf)
    return result


def subdivide_and_bound(
    spec: ProgramSpec,
    options: Optional[EngineOptions] = None,
    budget: Optional[int] = None,
    box_bound: Optional[BoxBound] = None,
    strict: bool = False,
) -> BoundResult:
    """Bisect the box until the target bound is met or ``budget`` leaves exist.

    The leaf with the largest bound is split at the midpoint of its widest
    relative dimension. The result is the hull over all leaves. With a
    positive ``spec.target_bound`` the result records whether it was met.

    Raises:
        BudgetExhausted: with ``strict`` only, if the target is still unmet
            when the budget runs out; ``best_bound`` holds the bound reached.
    """
    options = options or EngineOptions.from_settings()
    budget = max(1, budget if budget is not None else options.subdivide_budget)
    run: BoxBound = box_bound or bound_nlprog
    base = input_set(spec)
    counter = itertools.count()

    first = run(spec, options, base)
    heap = [_Leaf(-first.bound, next(counter), spec.box, first)]
    target = spec.target_bound
    while len(heap) < budget:
        if target > 0 and -heap[0].priority <= target:
            break
        leaf = heapq.heappop(heap)
        dim = split_dimension(leaf.box)
        if dim is None:
            heapq.heappush(heap, leaf)
            break
        for half in leaf.box[dim].split():
            box = leaf.box[:dim] + (half,) + leaf.box[dim + 1 :]
            child = _tighten(run(spec.with_box(box), options, base.with_box(box)), leaf.result)
            heapq.heappush(heap, _Leaf(-child.bound, next(counter), box, child))
        logger.debug("Split box", dimension=dim, leaves=len(heap), worst=float(-heap[0].priority))

    leaves = [leaf.result for leaf in sorted(heap)]
    result = leaves[0] if len(leaves) == 1 else merge_leaves(leaves)
    logger.info("Subdivided bound", program=spec.name, boxes=len(leaves), bound=float(result.bound))
    if target > 0:
        result.target_met = result.bound <= target
    if result.target_met is False:
        if strict:
            raise BudgetExhausted(
                f"target {float(target):.3e} not reached with {len(leaves)} boxes",
                best_bound=result.bound,
                details={"program": spec.name, "boxes": len(leaves)},
            )
        logger.warning("Target bound not met", program=spec.name, target=float(target), bound=float(result.bound))
    return result
