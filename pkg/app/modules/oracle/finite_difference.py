"""One-sided finite differences with Richardson extrapolation."""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.exceptions import DimensionMismatchError
from app.modules.graph.evaluator import evaluate
from app.modules.graph.program import ProgramDef
from app.modules.library.registry import LibraryRegistry

logger = logging.getLogger(__name__)

DEFAULT_STEPS = tuple(10.0**-k for k in range(3, 9))


@dataclass(frozen=True)
class FDSchedule:
    steps: Tuple[float, ...] = DEFAULT_STEPS
    order: int = 2

    def __post_init__(self):
        if not self.steps or any(h <= 0 for h in self.steps):
            raise ValueError("finite-difference steps must be positive")
        if any(b >= a for a, b in zip(self.steps, self.steps[1:])):
            raise ValueError("finite-difference steps must be strictly decreasing")
        if self.order < 0:
            raise ValueError("extrapolation order must be non-negative")


@dataclass(frozen=True)
class FDResult:
    value: float
    error: float
    converged: bool
    quotients: Tuple[float, ...] = field(default=(), repr=False)


def _richardson(table: List[object], steps: Sequence, order: int) -> List[List[object]]:
    """Rows of the extrapolation table; row ``m`` cancels the first ``m`` powers of h."""
    rows = [list(table)]
    for m in range(1, order + 1):
        prev = rows[-1]
        row = []
        for i in range(len(prev) - 1):
            r = (steps[i] / steps[i + 1]) ** m
            row.append((r * prev[i + 1] - prev[i]) / (r - 1))
        if not row:
            break
        rows.append(row)
    return rows


def fd_directional(
    prog: ProgramDef,
    x: Sequence,
    v: Sequence,
    lib: LibraryRegistry,
    schedule: Optional[FDSchedule] = None,
    exact: bool = False,
    threshold: float = 1e-6,
) -> FDResult:
    """Extrapolated ``(f(x + h v) - f(x)) / h`` as h decreases.

    The returned estimate is the extrapolated entry that differs least from
    its successor; that difference is the error estimate. With ``exact``
    the quotients are computed in rational arithmetic, leaving truncation as
    the only error source.
    """
    schedule = schedule or FDSchedule()
    if len(x) != prog.input_arity or len(v) != prog.input_arity:
        raise DimensionMismatchError(f"expected {prog.input_arity}-dimensional point and direction")
    if exact:
        xs = [Fraction(a) for a in x]
        vs = [Fraction(b) for b in v]
        steps = [Fraction(h).limit_denominator(10**12) for h in schedule.steps]
    else:
        xs = [float(a) for a in x]
        vs = [float(b) for b in v]
        steps = list(schedule.steps)

    base = evaluate(prog, xs, lib, exact=exact).value
    quotients = []
    for h in steps:
        shifted = [a + h * b for a, b in zip(xs, vs)]
        quotients.append((evaluate(prog, shifted, lib, exact=exact).value - base) / h)

    rows = _richardson(quotients, steps, schedule.order)
    last = rows[-1]
    if len(last) < 2:
        value, error = last[-1], abs(rows[0][-1] - rows[0][-2]) if len(rows[0]) > 1 else float("inf")
    else:
        diffs = [abs(last[i + 1] - last[i]) for i in range(len(last) - 1)]
        best = int(np.argmin([float(d) for d in diffs]))
        value, error = last[best + 1], diffs[best]
    value, error = float(value), float(error)
    converged = error <= max(threshold, threshold * abs(value))
    if not converged:
        logger.debug(f"finite differences on '{prog.name}' did not settle: {value} +/- {error}")
    return FDResult(value, error, converged, tuple(float(q) for q in quotients))
