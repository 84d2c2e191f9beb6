import logging
import threading
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, Mapping, Optional, Tuple

from app.exceptions import LibraryDefinitionError
from app.modules.graph.pieces import PieceDescription, extract_pieces
from app.modules.graph.program import Affine, Branch, BranchProgram, Compute, Monomial, Return
from app.modules.graph.validator import validate_branch_program
from app.modules.library.qualification import sampled_cq_check

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LibraryFunction:
    """A branching library program; ``claims_qualified`` asserts the constraint qualification."""

    name: str
    arity: int
    program: BranchProgram
    claims_qualified: bool = True
    description: str = ""
    _pieces: Dict[Tuple[int, int], Tuple[PieceDescription, ...]] = field(
        default_factory=dict, init=False, repr=False, compare=False
    )
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.program.input_arity != self.arity:
            raise LibraryDefinitionError(
                self.name, [f"declared arity {self.arity} but the program takes {self.program.input_arity}"]
            )
        report = validate_branch_program(self.program)
        if not report.ok:
            raise LibraryDefinitionError(self.name, report.violations)

    def pieces(self, max_branch_nodes: int = 20, max_terms: int = 100_000) -> Tuple[PieceDescription, ...]:
        """Symbolic pieces of the program, cached per bound."""
        key = (max_branch_nodes, max_terms)
        with self._lock:
            if key not in self._pieces:
                self._pieces[key] = extract_pieces(self.program, max_branch_nodes, max_terms)
            return self._pieces[key]


class LibraryRegistry(Mapping[str, LibraryFunction]):
    """Immutable name -> LibraryFunction mapping."""

    def __init__(self, functions: Iterable[LibraryFunction] = ()):
        table: Dict[str, LibraryFunction] = {}
        for fn in functions:
            if fn.name in table:
                raise LibraryDefinitionError(fn.name, ["name already registered"])
            table[fn.name] = fn
        self._table = table

    def __getitem__(self, name: str) -> LibraryFunction:
        return self._table[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._table)

    def __len__(self) -> int:
        return len(self._table)

    def get(self, name: str, default: Optional[LibraryFunction] = None) -> Optional[LibraryFunction]:
        return self._table.get(name, default)

    def with_functions(
        self,
        functions: Iterable[LibraryFunction],
        cq_check: bool = True,
        samples: int = 64,
        seed: int = 0,
    ) -> "LibraryRegistry":
        """A new registry extended by ``functions``.

        Functions that claim qualification get a sampled constraint
        qualification check unless ``cq_check`` is off; a failure downgrades
        the claim instead of rejecting the function.
        """
        added = []
        for fn in functions:
            if cq_check and fn.claims_qualified and samples > 0:
                outcome = sampled_cq_check(fn, samples=samples, seed=seed)
                if outcome is not None and not outcome.passed and not outcome.inconclusive:
                    logger.warning(
                        f"Library function '{fn.name}' fails the constraint qualification "
                        f"check: {outcome.describe()}; registering it as unqualified"
                    )
                    note = f"registration check failed: {outcome.describe()}"
                    fn = LibraryFunction(fn.name, fn.arity, fn.program, False, f"{fn.description} ({note})".strip())
            logger.info(f"Registering library function '{fn.name}' (arity {fn.arity})")
            added.append(fn)
        return LibraryRegistry(list(self._table.values()) + added)


def _zero_else(target: int, ret: int) -> Compute:
    return Compute(target, Affine(0), Return(ret))


def _relu() -> LibraryFunction:
    body = Branch(1, Return(1), _zero_else(2, 2))
    return LibraryFunction("relu", 1, BranchProgram(1, body), True, "x if x >= 0 else 0")


def _relu_bad() -> LibraryFunction:
    # same function, tested through x^3: the constraint gradient vanishes at 0
    body = Compute(2, Monomial(1, ((1, 3),)), Branch(2, Return(1), _zero_else(3, 3)))
    return LibraryFunction("relu_bad", 1, BranchProgram(1, body), False, "relu tested through x^3 >= 0")


def _abs() -> LibraryFunction:
    body = Branch(1, Return(1), Compute(2, Affine(0, ((-1, 1),)), Return(2)))
    return LibraryFunction("abs", 1, BranchProgram(1, body), True, "|x|")


def _max2() -> LibraryFunction:
    body = Compute(3, Affine(0, ((1, 1), (-1, 2))), Branch(3, Return(1), Return(2)))
    return LibraryFunction("max2", 2, BranchProgram(2, body), True, "max{x, y} via x - y >= 0")


def _min2() -> LibraryFunction:
    body = Compute(3, Affine(0, ((1, 2), (-1, 1))), Branch(3, Return(1), Return(2)))
    return LibraryFunction("min2", 2, BranchProgram(2, body), True, "min{x, y} via y - x >= 0")


def builtin_registry(extra: Iterable[LibraryFunction] = ()) -> LibraryRegistry:
    """relu, relu_bad, abs, max2, min2, plus any caller-supplied functions (e.g. piecewise ladders)."""
    registry = LibraryRegistry([_relu(), _relu_bad(), _abs(), _max2(), _min2()])
    extra = list(extra)
    if extra:
        registry = registry.with_functions(extra, cq_check=False)
    return registry
