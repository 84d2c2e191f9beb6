"""Constraint qualification diagnostic for library programs.

At a given ``(x, v)`` the check is exact: the limiting sign of every
constraint along ``x + delta v`` must equal the sign predicted by its value
and gradient. Qualification for all ``(x, v)`` can only be sampled, so a pass
is evidence and a fail is a proof of violation.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, List, Optional, Sequence, Tuple

import numpy as np

from app.exceptions import PieceEnumerationError
from app.modules.graph.pieces import limiting_sign
from app.modules.graph.polynomial import Polynomial

if TYPE_CHECKING:
    from app.modules.library.registry import LibraryFunction

logger = logging.getLogger(__name__)

Point = Tuple[Fraction, ...]


@dataclass(frozen=True)
class CQWitness:
    word: Tuple[int, ...]
    constraint: Polynomial
    x: Point
    v: Point
    limiting: int
    first_order: int


@dataclass(frozen=True)
class CQResult:
    passed: bool
    inconclusive: bool = False
    witness: Optional[CQWitness] = None
    reason: str = ""

    def describe(self) -> str:
        if self.inconclusive:
            return f"inconclusive ({self.reason})"
        if self.passed:
            return "pass"
        w = self.witness
        return (
            f"constraint {w.constraint} at x={[str(a) for a in w.x]}, v={[str(b) for b in w.v]}: "
            f"limiting sign {w.limiting:+d}, first-order sign {w.first_order:+d}"
        )


def first_order_sign(h: Polynomial, x: Sequence[Fraction], v: Sequence[Fraction]) -> int:
    """``lim sign(h(x) + delta grad h(x) . v)``, computed exactly."""
    value = h.evaluate(x)
    if value != 0:
        return 1 if value > 0 else -1
    slope = sum((g.evaluate(x) * b for g, b in zip(h.gradient(), v)), Fraction(0))
    if slope != 0:
        return 1 if slope > 0 else -1
    return 1


def cq_diagnostic(g: "LibraryFunction", x: Sequence, v: Sequence, max_branch_nodes: int = 20) -> CQResult:
    xs = tuple(Fraction(a) for a in x)
    vs = tuple(Fraction(b) for b in v)
    try:
        pieces = g.pieces(max_branch_nodes)
    except PieceEnumerationError as exc:
        return CQResult(passed=False, inconclusive=True, reason=str(exc))
    seen = set()
    for piece in pieces:
        for h, _ in piece.constraints:
            if h in seen:
                continue
            seen.add(h)
            lhs = limiting_sign(h, xs, vs)
            rhs = first_order_sign(h, xs, vs)
            if lhs != rhs:
                witness = CQWitness(piece.word, h, xs, vs, lhs, rhs)
                return CQResult(passed=False, witness=witness)
    return CQResult(passed=True)


def _distinct_constraints(g: "LibraryFunction", max_branch_nodes: int) -> List[Polynomial]:
    out: List[Polynomial] = []
    for piece in g.pieces(max_branch_nodes):
        for h, _ in piece.constraints:
            if h not in out:
                out.append(h)
    return out


def _divisors(n: int) -> List[int]:
    out: List[int] = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.extend(sorted({d, n // d}))
        d += 1
    return out


def _horner(coeffs: Sequence[Fraction], r: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(coeffs):
        acc = acc * r + c
    return acc


def rational_roots(coeffs: Sequence[Fraction], limit: int = 10**6) -> List[Fraction]:
    """Exact rational roots of an ascending coefficient list.

    Candidates are ``p/q`` with ``p`` dividing the integer-scaled constant term
    and ``q`` the leading one. Scaled coefficients above ``limit`` are not
    searched.
    """
    coeffs = [Fraction(c) for c in coeffs]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    roots: List[Fraction] = []
    if coeffs and coeffs[0] == 0:
        roots.append(Fraction(0))
        while coeffs[0] == 0:
            coeffs.pop(0)
    if len(coeffs) < 2:
        return roots
    scale = math.lcm(*(c.denominator for c in coeffs))
    low, high = abs(int(coeffs[0] * scale)), abs(int(coeffs[-1] * scale))
    if low > limit or high > limit:
        return roots
    for p in _divisors(low):
        for q in _divisors(high):
            for r in (Fraction(p, q), Fraction(-p, q)):
                if r not in roots and _horner(coeffs, r) == 0:
                    roots.append(r)
    return roots


def constraint_points(
    g: "LibraryFunction", rng: np.random.Generator, count: int = 4, max_branch_nodes: int = 20
) -> List[Point]:
    """Points on constraint zero sets.

    Univariate constraints contribute their rational roots exactly and their
    remaining real roots as float approximations; affine constraints
    contribute exact orthogonal projections of random points.
    """
    points: List[Point] = []
    for h in _distinct_constraints(g, max_branch_nodes):
        if h.degree() == 0:
            continue
        if g.arity == 1:
            exact = rational_roots(h.coefficients())
            points.extend((r,) for r in exact)
            approx: List[float] = []
            for root in np.roots([float(c) for c in reversed(h.coefficients())]):
                if abs(root.imag) >= 1e-12:
                    continue
                t = float(root.real)
                if all(abs(t - float(r)) > 1e-9 for r in exact) and all(abs(t - a) > 1e-9 for a in approx):
                    approx.append(t)
                    points.append((Fraction(t),))
        elif h.degree() == 1:
            normal = [gi.evaluate([Fraction(0)] * g.arity) for gi in h.gradient()]
            norm2 = sum(a * a for a in normal)
            for _ in range(count):
                base = [Fraction(float(t)) for t in rng.standard_normal(g.arity)]
                shift = h.evaluate(base) / norm2
                points.append(tuple(b - shift * a for a, b in zip(normal, base)))
    return points


def sampled_cq_check(
    g: "LibraryFunction", samples: int = 64, seed: int = 0, max_branch_nodes: int = 20
) -> Optional[CQResult]:
    """Run cq_diagnostic on constraint points and random points; None when inconclusive."""
    rng = np.random.default_rng(seed)
    try:
        points = constraint_points(g, rng, max_branch_nodes=max_branch_nodes)
    except PieceEnumerationError:
        logger.info(f"Skipping qualification sampling for '{g.name}': too many branches")
        return None
    while len(points) < samples:
        points.append(tuple(Fraction(float(t)) for t in rng.standard_normal(g.arity)))

    axes = []
    for i in range(g.arity):
        for s in (1, -1):
            e = [Fraction(0)] * g.arity
            e[i] = Fraction(s)
            axes.append(tuple(e))

    for x in points:
        directions = axes + [tuple(Fraction(float(t)) for t in rng.standard_normal(g.arity))]
        for v in directions:
            result = cq_diagnostic(g, x, v, max_branch_nodes)
            if not result.passed:
                return result
    return CQResult(passed=True)
