"""Ground-truth subgradients from symbolic whole-program pieces.

Library pieces are substituted into the polynomials of their arguments, so
every global piece is a set of constraints and a polynomial in the program
inputs. The limiting piece along ``x + delta v`` is selected exactly.
"""

import logging
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from app.exceptions import PieceEnumerationError, ProgramError
from app.modules.graph.pieces import (
    DEFAULT_MAX_BRANCH_NODES,
    DEFAULT_MAX_TERMS,
    PieceDescription,
    limiting_sign,
    piece_select,
    symbolic_instruction,
)
from app.modules.graph.polynomial import Polynomial
from app.modules.graph.program import LibCall, ProgramDef
from app.modules.library.registry import LibraryRegistry

logger = logging.getLogger(__name__)

Constraints = Tuple[Tuple[Polynomial, int], ...]


def program_branch_count(prog: ProgramDef, lib: LibraryRegistry) -> int:
    total = 0
    for call in prog.lib_calls:
        fn = lib.get(call.name)
        if fn is None:
            raise ProgramError(f"unknown library function '{call.name}'")
        total += fn.program.branch_count
    return total


def _compose(
    prog: ProgramDef,
    lib: LibraryRegistry,
    max_branch_nodes: int,
    max_terms: int,
    along: Optional[Tuple[Sequence[Fraction], Sequence[Fraction]]] = None,
) -> List[PieceDescription]:
    branches = program_branch_count(prog, lib)
    if branches > max_branch_nodes:
        raise PieceEnumerationError(
            f"'{prog.name}' has {branches} branch nodes in its library calls, enumeration bound is {max_branch_nodes}"
        )
    n = prog.input_arity
    base = {i + 1: Polynomial.variable(n, i) for i in range(n)}
    states: List[Tuple[Dict[int, Polynomial], Constraints, Tuple[int, ...]]] = [(base, (), ())]
    cache: Dict[Polynomial, int] = {}

    def holds(h: Polynomial, s: int) -> bool:
        if along is None:
            return True
        if h not in cache:
            cache[h] = limiting_sign(h, *along)
        return cache[h] == s

    for assignment in prog.assignments:
        instr = assignment.instruction
        k = assignment.target
        if not isinstance(instr, LibCall):
            for polys, _, _ in states:
                polys[k] = symbolic_instruction(instr, polys, n, max_terms)
            continue
        fn = lib[instr.name]
        local_pieces = fn.pieces(max_branch_nodes, max_terms)
        expanded = []
        for polys, constraints, word in states:
            args = [polys[j] for j in instr.args]
            for piece in local_pieces:
                composed = tuple((h.compose(args, max_terms), s) for h, s in piece.constraints)
                if not all(holds(h, s) for h, s in composed):
                    continue
                out = dict(polys)
                out[k] = piece.piece.compose(args, max_terms)
                expanded.append((out, constraints + composed, word + piece.word))
        states = expanded

    return [PieceDescription(word, constraints, polys[prog.output]) for polys, constraints, word in states]


def compose_program_pieces(
    prog: ProgramDef,
    lib: LibraryRegistry,
    max_branch_nodes: int = DEFAULT_MAX_BRANCH_NODES,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> Tuple[PieceDescription, ...]:
    """Every global piece, one per combination of library paths (infeasible ones included)."""
    pieces = _compose(prog, lib, max_branch_nodes, max_terms)
    logger.debug(f"'{prog.name}' composes into {len(pieces)} piece(s)")
    return tuple(pieces)


def select_program_piece(
    prog: ProgramDef,
    x: Sequence,
    v: Sequence,
    lib: LibraryRegistry,
    max_branch_nodes: int = DEFAULT_MAX_BRANCH_NODES,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> PieceDescription:
    """The global piece approached along ``x + delta v``.

    Library paths whose constraints fail in the limit are pruned while
    composing, so only the selected piece is expanded; piece_select then
    confirms it is the unique survivor.
    """
    xs = tuple(Fraction(a) for a in x)
    vs = tuple(Fraction(b) for b in v)
    survivors = _compose(prog, lib, max_branch_nodes, max_terms, along=(xs, vs))
    return piece_select(survivors, xs, vs)


def exact_piece_gradient(
    prog: ProgramDef,
    x: Sequence,
    v: Sequence,
    lib: LibraryRegistry,
    max_branch_nodes: int = DEFAULT_MAX_BRANCH_NODES,
    max_terms: int = DEFAULT_MAX_TERMS,
) -> Tuple[Fraction, ...]:
    piece = select_program_piece(prog, x, v, lib, max_branch_nodes, max_terms)
    return piece.gradient_at(x)
