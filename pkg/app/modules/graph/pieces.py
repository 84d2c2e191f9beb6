"""Symbolic piece extraction and exact limiting-sign selection.

A branching program is a sum over branch words ``z`` of an indicator of the
set where the program follows ``z`` times a polynomial. Each piece lists the
constraint polynomials tested along its path with the sign required by that
path; ``sign(0) = +1`` throughout.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

from app.exceptions import PieceEnumerationError, PieceSelectionError
from app.modules.graph.polynomial import Polynomial, guard_terms
from app.modules.graph.program import Affine, Branch, BranchProgram, Compute, Instruction, Monomial, Return, Step

logger = logging.getLogger(__name__)

DEFAULT_MAX_BRANCH_NODES = 20
DEFAULT_MAX_TERMS = 100_000


@dataclass(frozen=True)
class PieceDescription:
    word: Tuple[int, ...]
    constraints: Tuple[Tuple[Polynomial, int], ...]
    piece: Polynomial

    def contains(self, x: Sequence) -> bool:
        """Whether ``x`` satisfies every constraint under sign(0) = +1 (exact)."""
        point = [Fraction(a) for a in x]
        return all(sign_of(h.evaluate(point)) == s for h, s in self.constraints)

    def gradient_at(self, x: Sequence) -> Tuple[Fraction, ...]:
        point = [Fraction(a) for a in x]
        return tuple(g.evaluate(point) for g in self.piece.gradient())


def sign_of(value) -> int:
    return 1 if value >= 0 else -1


def symbolic_instruction(
    instr: Instruction, polys: Dict[int, Polynomial], n: int, max_terms: int
) -> Polynomial:
    if isinstance(instr, Affine):
        out = Polynomial.constant(n, instr.constant)
        for c, j in instr.terms:
            out = out + polys[j] * c
        return guard_terms(out, max_terms)
    if isinstance(instr, Monomial):
        out = Polynomial.constant(n, instr.coefficient)
        for j, e in instr.factors:
            out = guard_terms(out * polys[j] ** e, max_terms)
        return out
    raise PieceEnumerationError(f"cannot expand {type(instr).__name__} symbolically")


def extract_pieces(
    bp: BranchProgram,
    max_branch_nodes: int = DEFAULT_MAX_BRANCH_NODES,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> Tuple[PieceDescription, ...]:
    """One PieceDescription per root-to-leaf path, in then-before-else order."""
    branches = bp.branch_count
    if branches > max_branch_nodes:
        raise PieceEnumerationError(
            f"program has {branches} branch nodes, enumeration bound is {max_branch_nodes}"
        )
    n = bp.input_arity
    base = {i + 1: Polynomial.variable(n, i) for i in range(n)}
    pieces: List[PieceDescription] = []

    stack: List[Tuple[Step, Dict[int, Polynomial], Tuple[Tuple[Polynomial, int], ...], Tuple[int, ...]]]
    stack = [(bp.body, base, (), ())]
    while stack:
        step, polys, constraints, word = stack.pop()
        if isinstance(step, Return):
            pieces.append(PieceDescription(word, constraints, polys[step.node]))
        elif isinstance(step, Compute):
            polys = dict(polys)
            polys[step.target] = symbolic_instruction(step.instruction, polys, n, max_terms)
            stack.append((step.next, polys, constraints, word))
        elif isinstance(step, Branch):
            h = polys[step.test]
            stack.append((step.otherwise, polys, constraints + ((h, -1),), word + (-1,)))
            stack.append((step.then, polys, constraints + ((h, 1),), word + (1,)))
    logger.debug(f"Extracted {len(pieces)} piece(s) from a {n}-input program")
    return tuple(pieces)


def limiting_sign(h: Polynomial, x: Sequence, v: Sequence) -> int:
    """Exact ``lim_{delta -> 0+} sign(h(x + delta v))``.

    The sign of the lowest-order non-zero coefficient of ``h(x + delta v)`` as a
    polynomial in delta; +1 when every coefficient vanishes.
    """
    for coeff in h.along_line(x, v):
        if coeff != 0:
            return 1 if coeff > 0 else -1
    return 1


def piece_select(pieces: Sequence[PieceDescription], x: Sequence, v: Sequence) -> PieceDescription:
    """The unique piece whose constraints all hold in the limit along ``x + delta v``."""
    xs = [Fraction(a) for a in x]
    vs = [Fraction(b) for b in v]
    cache: Dict[Polynomial, int] = {}

    def limit(h: Polynomial) -> int:
        if h not in cache:
            cache[h] = limiting_sign(h, xs, vs)
        return cache[h]

    matches = [p for p in pieces if all(limit(h) == s for h, s in p.constraints)]
    if len(matches) != 1:
        raise PieceSelectionError(
            f"{len(matches)} pieces match the limiting signs at x={list(map(str, xs))}, "
            f"v={list(map(str, vs))}; the piece set is inconsistent"
        )
    return matches[0]
