"""Univariate piecewise polynomial library functions.

``make_piecewise_poly`` builds a ladder of sign tests ``b_i - x >= 0``: the
first breakpoint not below ``x`` selects the piece, so ``x == b_i`` belongs to
the piece on the left. Each piece is computed as

    n = affine c0 [c1 n1] [1 m2] [1 m3] ...    with  m_j = mono c_j n1^j

so the value at ``x`` is ``c0 + c1*x + c2*x^2 + ...`` accumulated left to right.
"""

import logging
from fractions import Fraction
from itertools import count
from typing import Iterator, List, Sequence, Tuple

from app.exceptions import PiecewiseDefinitionError
from app.modules.graph.polynomial import Polynomial
from app.modules.graph.program import Affine, Branch, BranchProgram, Compute, Monomial, Return, Step
from app.modules.library.registry import LibraryFunction

logger = logging.getLogger(__name__)


def _coefficients(piece) -> Tuple[Fraction, ...]:
    if isinstance(piece, Polynomial):
        if piece.n != 1:
            raise ValueError("piecewise pieces must be univariate")
        coeffs = tuple(piece.coefficients())
    else:
        coeffs = tuple(Fraction(c) for c in piece)
    return coeffs or (Fraction(0),)


def _piece_step(coeffs: Sequence[Fraction], nodes: Iterator[int]) -> Step:
    """Straight-line code computing one piece from input node 1."""
    if list(coeffs[:2]) == [0, 1] and not any(coeffs[2:]):
        return Return(1)
    computes: List[Tuple[int, object]] = []
    terms = []
    if len(coeffs) > 1 and coeffs[1] != 0:
        terms.append((coeffs[1], 1))
    for j, c in enumerate(coeffs[2:], start=2):
        if c == 0:
            continue
        target = next(nodes)
        computes.append((target, Monomial(c, ((1, j),))))
        terms.append((Fraction(1), target))
    result = next(nodes)
    computes.append((result, Affine(coeffs[0], tuple(terms))))
    step: Step = Return(result)
    for target, instr in reversed(computes):
        step = Compute(target, instr, step)
    return step


def make_piecewise_poly(
    name: str,
    breakpoints: Sequence,
    pieces: Sequence,
    description: str = "",
) -> LibraryFunction:
    """Ladder program for ``p_i`` on ``(b_{i-1}, b_i]``.

    ``pieces`` holds ascending coefficient sequences or univariate
    Polynomials; there must be one more piece than breakpoints. Breakpoints
    must be strictly increasing and neighbouring pieces must agree exactly at
    their shared breakpoint.
    """
    bs = tuple(Fraction(b) for b in breakpoints)
    ps = [_coefficients(p) for p in pieces]
    problems = []
    if len(ps) != len(bs) + 1:
        problems.append(f"{len(bs)} breakpoint(s) need {len(bs) + 1} pieces, got {len(ps)}")
    for left, right in zip(bs, bs[1:]):
        if not left < right:
            problems.append(f"breakpoints must be strictly increasing ({left} then {right})")
    if problems:
        raise PiecewiseDefinitionError(name, problems)

    polys = [Polynomial.univariate(c) for c in ps]
    for i, b in enumerate(bs):
        lhs = polys[i].evaluate([b])
        rhs = polys[i + 1].evaluate([b])
        if lhs != rhs:
            problems.append(f"discontinuity at breakpoint {b}: piece {i + 1} gives {lhs}, piece {i + 2} gives {rhs}")
    if problems:
        raise PiecewiseDefinitionError(name, problems)

    nodes = count(2)

    def ladder(i: int) -> Step:
        if i == len(bs):
            return _piece_step(ps[i], nodes)
        test = next(nodes)
        then = _piece_step(ps[i], nodes)
        otherwise = ladder(i + 1)
        return Compute(test, Affine(bs[i], ((Fraction(-1), 1),)), Branch(test, then, otherwise))

    body = ladder(0)
    logger.debug(f"Built piecewise polynomial '{name}' with {len(ps)} piece(s)")
    return LibraryFunction(name, 1, BranchProgram(1, body), True, description or f"piecewise polynomial, breaks {list(map(str, bs))}")
