"""Program builders shared by the tests."""

from dataclasses import dataclass
from fractions import Fraction
from itertools import count
from typing import List, Optional, Tuple

import numpy as np

from app.modules.graph.program import (
    Affine,
    Assignment,
    Branch,
    BranchProgram,
    Compute,
    LibCall,
    Monomial,
    ProgramDef,
    Return,
)
from app.modules.library.loader import load_source
from app.modules.library.registry import LibraryFunction, LibraryRegistry, builtin_registry


def program_from(text: str, name: str = "test", cq_check: bool = False):
    prog, lib = load_source(text, name, cq_check=cq_check)
    return prog, lib


def generic_direction(rng: np.random.Generator, dim: int) -> Tuple[Fraction, ...]:
    """Exact copy of a random float direction; coincidences with kink geometry have probability zero."""
    return tuple(Fraction(float(t)) for t in rng.standard_normal(dim))


def max_library(m: int) -> LibraryFunction:
    """``max`` of ``m`` arguments by a tournament of sign tests on differences."""
    nodes = count(m + 1)

    def step(champion: int, j: int):
        if j > m:
            return Return(champion)
        t = next(nodes)
        test = Affine(Fraction(0), ((Fraction(1), champion), (Fraction(-1), j)))
        return Compute(t, test, Branch(t, step(champion, j + 1), step(j, j + 1)))

    return LibraryFunction(f"max{m}", m, BranchProgram(m, step(1, 2)), True, f"max of {m} arguments")


def composition_registry() -> LibraryRegistry:
    return builtin_registry([max_library(3), max_library(4)])


@dataclass(frozen=True)
class Composition:
    program: ProgramDef
    inner_outputs: Tuple[int, ...]
    outer: str
    point: Tuple[Fraction, ...]


def _nonzero(rng: np.random.Generator, low: int = -3, high: int = 3) -> Fraction:
    while True:
        c = int(rng.integers(low, high + 1))
        if c:
            return Fraction(c)


def random_composition(
    rng: np.random.Generator, dim: Optional[int] = None, m: Optional[int] = None, depth: Optional[int] = None
) -> Composition:
    """``h(g_1, ..., g_m)`` with each ``g_i`` a random straight-line chain of up to ``depth`` nodes.

    The point has coordinates in {-1, 0, 1}, so sign tests regularly sit
    exactly on kinks.
    """
    dim = dim or int(rng.integers(1, 4))
    m = m or int(rng.integers(1, 5))
    depth = depth or int(rng.integers(1, 4))

    assignments: List[Assignment] = []
    degree = {k: 1 for k in range(1, dim + 1)}
    fresh = count(dim + 1)
    available = list(range(1, dim + 1))
    outputs = []

    def pick() -> int:
        return available[int(rng.integers(len(available)))]

    for _ in range(m):
        last = pick()
        for _ in range(int(rng.integers(1, depth + 1))):
            k = next(fresh)
            kind = rng.choice(["affine", "mono", "relu", "abs", "max2", "min2"])
            other = pick()
            if kind == "mono" and degree[last] * 2 > 4:
                kind = "affine"
            if kind == "affine":
                terms = ((_nonzero(rng), last),)
                if other != last:
                    terms += ((_nonzero(rng), other),)
                instr = Affine(Fraction(int(rng.integers(-1, 2))), terms)
                degree[k] = max(degree[last], degree[other])
            elif kind == "mono":
                instr = Monomial(_nonzero(rng, -2, 2), ((last, 2),))
                degree[k] = degree[last] * 2
            elif kind in ("relu", "abs"):
                instr = LibCall(str(kind), (last,))
                degree[k] = degree[last]
            else:
                instr = LibCall(str(kind), (last, other))
                degree[k] = max(degree[last], degree[other])
            assignments.append(Assignment(k, instr))
            available.append(k)
            last = k
        outputs.append(last)

    if m == 1:
        outer = str(rng.choice(["relu", "abs"]))
    elif m == 2:
        outer = str(rng.choice(["max2", "min2"]))
    else:
        outer = f"max{m}"
    out = next(fresh)
    assignments.append(Assignment(out, LibCall(outer, tuple(outputs))))
    prog = ProgramDef(dim, tuple(assignments), out, "composition")
    point = tuple(Fraction(int(rng.integers(-1, 2))) for _ in range(dim))
    return Composition(prog, tuple(outputs), outer, point)
