"""Program representations: straight-line programs and branching library programs.

Node numbering follows the straight-line model: nodes ``1..d`` are the inputs and
every instruction defines a node whose index exceeds every node it reads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, List, Tuple, Union


@dataclass(frozen=True)
class Affine:
    """``constant + sum(coefficient * n_j)``; zero terms make a constant node."""

    constant: Fraction
    terms: Tuple[Tuple[Fraction, int], ...] = ()

    @property
    def parents(self) -> Tuple[int, ...]:
        return tuple(j for _, j in self.terms)


@dataclass(frozen=True)
class Monomial:
    """``coefficient * prod(n_j ** e_j)`` with every exponent at least 1."""

    coefficient: Fraction
    factors: Tuple[Tuple[int, int], ...] = ()

    @property
    def parents(self) -> Tuple[int, ...]:
        return tuple(j for j, _ in self.factors)

    @property
    def total_degree(self) -> int:
        return sum(e for _, e in self.factors)


@dataclass(frozen=True)
class LibCall:
    name: str
    args: Tuple[int, ...]

    @property
    def parents(self) -> Tuple[int, ...]:
        return self.args


Instruction = Union[Affine, Monomial, LibCall]


@dataclass(frozen=True)
class Assignment:
    """One SSA line: ``n<target> = <instruction>``."""

    target: int
    instruction: Instruction


@dataclass(frozen=True)
class ProgramDef:
    input_arity: int
    assignments: Tuple[Assignment, ...]
    output: int
    name: str = "program"

    @property
    def instructions(self) -> Tuple[Instruction, ...]:
        return tuple(a.instruction for a in self.assignments)

    @property
    def lib_calls(self) -> Tuple[LibCall, ...]:
        return tuple(a.instruction for a in self.assignments if isinstance(a.instruction, LibCall))

    @property
    def is_straight_line(self) -> bool:
        """True when the program calls no library function (smooth polynomial map)."""
        return not self.lib_calls


# -- branching programs ---------------------------------------------------


@dataclass(frozen=True)
class Return:
    node: int


@dataclass(frozen=True)
class Compute:
    target: int
    instruction: Instruction
    next: "Step"


@dataclass(frozen=True)
class Branch:
    """Sign test on ``test``: ``then`` when it is >= 0 (sign(0)=+1), ``otherwise`` else."""

    test: int
    then: "Step"
    otherwise: "Step"


Step = Union[Return, Compute, Branch]


@dataclass(frozen=True)
class BranchProgram:
    input_arity: int
    body: Step

    @property
    def step_bound(self) -> int:
        """Longest root-to-leaf path, counting computes and branch tests."""
        return max(len(path) - 1 for path in iter_paths(self.body))

    @property
    def branch_count(self) -> int:
        return _count_branches(self.body)


def _count_branches(step: Step) -> int:
    count = 0
    stack: List[Step] = [step]
    while stack:
        s = stack.pop()
        if isinstance(s, Compute):
            stack.append(s.next)
        elif isinstance(s, Branch):
            count += 1
            stack.extend((s.then, s.otherwise))
    return count


def iter_paths(step: Step) -> Iterator[Tuple[Step, ...]]:
    """Yield every root-to-leaf sequence of steps (the leaf Return included)."""
    stack: List[Tuple[Step, Tuple[Step, ...]]] = [(step, ())]
    while stack:
        s, prefix = stack.pop()
        path = prefix + (s,)
        if isinstance(s, Return):
            yield path
        elif isinstance(s, Compute):
            stack.append((s.next, path))
        else:
            stack.append((s.otherwise, path))
            stack.append((s.then, path))


@dataclass(frozen=True)
class BranchTrace:
    """Signs taken at the branch tests of one library call, in execution order."""

    word: Tuple[int, ...] = ()

    def padded(self, length: int) -> Tuple[int, ...]:
        """Full-length word with -1 for the steps that did not branch."""
        if length < len(self.word):
            raise ValueError(f"trace of length {len(self.word)} does not fit in {length}")
        return self.word + (-1,) * (length - len(self.word))

    def __str__(self) -> str:
        return "".join("+" if z > 0 else "-" for z in self.word) or "(none)"


@dataclass
class CostMeter:
    """Unit-cost counters: one per multiplication, addition and branch test."""

    multiplications: int = 0
    additions: int = 0
    branch_tests: int = 0

    @property
    def total(self) -> int:
        return self.multiplications + self.additions + self.branch_tests

    def charge(self, multiplications: int = 0, additions: int = 0, branch_tests: int = 0) -> None:
        self.multiplications += multiplications
        self.additions += additions
        self.branch_tests += branch_tests


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[str, ...] = ()
    warnings: Tuple[str, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations
