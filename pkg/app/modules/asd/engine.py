"""Automatic subdifferentiation of straight-line programs over branching libraries.

Every library call is run with dual numbers. A branch test whose value is
exactly zero (or within ``kink_tol``) is resolved by the sign of its
directional derivative, taking the ``>= 0`` side when the derivative is
non-negative. The branch actually taken is therefore the one approached along
``x + delta v`` for small ``delta > 0``, and the gradient of the straight-line
code on that branch is the returned subgradient.

Two variants share one forward sweep:

``nested``
    each call runs reverse mode over its own path for its gradient and is
    recorded on the global tape as a single node holding that local tape.
    The global pass replays it seeded with the node's adjoint.
``flat``
    each call's path is spliced into the global tape under fresh node ids and
    one reverse pass runs over the whole unravelled graph.

Both variants perform the same floating-point operations in the same order
for the global gradient, so their outputs agree bit for bit. ``nested``
additionally pays for the per-call reverse passes.

``runtime_f`` is metered on the branch the sweep takes: value computations
and branch tests only.
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import count
from typing import Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple

from typing_extensions import Literal

from app.exceptions import DimensionMismatchError, ProgramError
from app.modules.asd.dual import Dual
from app.modules.asd.tape import Tape, TapeRecord, reverse_mode
from app.modules.graph.program import (
    Affine,
    Branch,
    BranchTrace,
    Compute,
    CostMeter,
    Instruction,
    LibCall,
    Monomial,
    ProgramDef,
    Return,
)
from app.modules.graph.semantics import (
    affine_cost,
    affine_partials,
    affine_value,
    directional,
    lift_for,
    monomial_cost,
    monomial_partials,
    monomial_products,
)
from app.modules.library.registry import LibraryFunction, LibraryRegistry

logger = logging.getLogger(__name__)

Variant = Literal["nested", "flat", "reverse"]
VARIANTS = ("nested", "flat")

KinkGradient = Callable[[LibraryFunction, Tuple[object, ...]], Optional[Sequence]]


class ASDOutput(NamedTuple):
    a: object
    d: object
    u: Tuple[object, ...]


@dataclass(frozen=True)
class CostReport:
    runtime_f: int
    runtime_asd: int
    multiplications: int = 0
    additions: int = 0
    branch_tests: int = 0

    @property
    def ratio(self) -> float:
        if self.runtime_f == 0:
            return 1.0 if self.runtime_asd == 0 else float("inf")
        return self.runtime_asd / self.runtime_f

    @classmethod
    def from_meters(cls, f_meter: CostMeter, meter: CostMeter) -> "CostReport":
        return cls(f_meter.total, meter.total, meter.multiplications, meter.additions, meter.branch_tests)


@dataclass(frozen=True)
class CallRecord:
    node: int
    name: str
    args: Tuple[Dual, ...]
    trace: BranchTrace
    ties: int
    gradient: Optional[Tuple[object, ...]] = None
    tape: Optional[Tape] = field(default=None, repr=False, compare=False)


@dataclass(frozen=True)
class ASDResult:
    value: object
    derivative: Optional[object]
    gradient: Tuple[object, ...]
    cost: CostReport
    variant: Variant
    calls: Tuple[CallRecord, ...] = ()
    tape: Optional[Tape] = field(default=None, repr=False, compare=False)

    @property
    def traces(self) -> Tuple[BranchTrace, ...]:
        return tuple(c.trace for c in self.calls)

    @property
    def tie_count(self) -> int:
        return sum(c.ties for c in self.calls)


class LibraryASD(NamedTuple):
    output: ASDOutput
    tape: Tape
    trace: BranchTrace
    ties: int
    cost: CostReport


class _Sweep:
    """One forward sweep; owns its value buffers, tape and meters."""

    def __init__(
        self,
        meter: CostMeter,
        exact: bool,
        use_duals: bool,
        kink_tol: float,
    ):
        self.meter = meter
        self.f_meter = CostMeter()
        self.lift = lift_for(exact)
        self.zero = self.lift(Fraction(0))
        self.exact = exact
        self.use_duals = use_duals
        self.kink_tol = Fraction(kink_tol) if exact else float(kink_tol)

    def primitive(
        self,
        instr: Instruction,
        ids: Dict[int, int],
        values: Dict[int, object],
        duals: Dict[int, object],
        tape: Tape,
        target: int,
    ) -> None:
        local = {j: values[ids[j]] for j in instr.parents}
        if isinstance(instr, Affine):
            value = affine_value(instr, local, self.lift, self.meter)
            self.f_meter.charge(*affine_cost(instr))
            partials = affine_partials(instr, self.lift)
        elif isinstance(instr, Monomial):
            products = monomial_products(instr, local, self.lift, self.meter)
            value = products.value
            self.f_meter.charge(multiplications=monomial_cost(instr))
            partials = monomial_partials(instr, products, self.lift, self.meter)
        else:
            raise ProgramError(f"unsupported primitive instruction {instr!r}")
        mapped = tuple((ids[j], p) for j, p in partials)
        values[target] = value
        if self.use_duals:
            duals[target] = directional(mapped, duals, self.zero, self.meter)
        tape.append(TapeRecord(target, value, mapped))

    def branch(self, value, dual) -> Tuple[int, bool]:
        """Side taken at a branch test and whether the test was a tie."""
        self.meter.charge(branch_tests=1)
        self.f_meter.charge(branch_tests=1)
        if not self.use_duals:
            return (1 if value >= 0 else -1), value == 0
        self.meter.charge(branch_tests=1)
        tie = value == 0 if not self.kink_tol else abs(value) <= self.kink_tol
        if tie:
            return (1 if dual >= 0 else -1), True
        return (1 if value >= 0 else -1), False

    def walk(
        self,
        fn: LibraryFunction,
        ids: Dict[int, int],
        values: Dict[int, object],
        duals: Dict[int, object],
        tape: Tape,
        allocate: Callable[[int], int],
    ) -> Tuple[int, BranchTrace, int]:
        """Run one library program; returns (tape id of the result, trace, ties)."""
        word: List[int] = []
        ties = 0
        step = fn.program.body
        while not isinstance(step, Return):
            if isinstance(step, Compute):
                target = allocate(step.target)
                self.primitive(step.instruction, ids, values, duals, tape, target)
                ids[step.target] = target
                step = step.next
            elif isinstance(step, Branch):
                tid = ids[step.test]
                z, tie = self.branch(values[tid], duals.get(tid))
                if tie:
                    ties += 1
                    logger.debug(f"'{fn.name}': tie at n{step.test} resolved to {z:+d}")
                word.append(z)
                step = step.then if z > 0 else step.otherwise
            else:
                raise ProgramError(f"unknown step {step!r}")
        return ids[step.node], BranchTrace(tuple(word)), ties


def _check_dims(arity: int, x: Sequence, v: Optional[Sequence]) -> None:
    if len(x) != arity:
        raise DimensionMismatchError(f"expected {arity} input(s), got a point of dimension {len(x)}")
    if v is not None and len(v) != arity:
        raise DimensionMismatchError(f"expected {arity} input(s), got a direction of dimension {len(v)}")


def _resolve(lib: LibraryRegistry, call: LibCall, node: int) -> LibraryFunction:
    fn = lib.get(call.name)
    if fn is None:
        raise ProgramError(f"unknown library function '{call.name}' at node {node}")
    if fn.arity != len(call.args):
        raise ProgramError(
            f"arity mismatch at node {node}: '{call.name}' expects {fn.arity}, got {len(call.args)}"
        )
    return fn


def _library_subroutine(
    sweep: _Sweep, fn: LibraryFunction, args: Sequence, arg_duals: Optional[Sequence]
) -> Tuple[object, object, Tuple[object, ...], Tape, BranchTrace, int]:
    """Local pass plus local reverse mode: value, derivative, gradient, tape, trace, ties."""
    arity = fn.arity
    inputs = tuple(range(1, arity + 1))
    values: Dict[int, object] = dict(zip(inputs, args))
    duals: Dict[int, object] = dict(zip(inputs, arg_duals)) if arg_duals is not None else {}
    tape = Tape(inputs, exact=sweep.exact)
    ids = {i: i for i in inputs}
    out, trace, ties = sweep.walk(fn, ids, values, duals, tape, lambda t: t)
    tape.output = out
    u = reverse_mode(tape, sweep.meter)
    return values[out], duals.get(out), u, tape, trace, ties


def asd_library(
    g: LibraryFunction,
    x: Sequence,
    v: Sequence,
    meter: Optional[CostMeter] = None,
    kink_tol: float = 0.0,
    exact: bool = False,
) -> LibraryASD:
    """Overloaded library call: ``[a, d, u]`` plus the tape of the branch taken."""
    _check_dims(g.arity, x, v)
    meter = meter if meter is not None else CostMeter()
    sweep = _Sweep(meter, exact, True, kink_tol)
    lift = sweep.lift
    a, d, u, tape, trace, ties = _library_subroutine(sweep, g, [lift(t) for t in x], [lift(t) for t in v])
    return LibraryASD(ASDOutput(a, d, u), tape, trace, ties, CostReport.from_meters(sweep.f_meter, meter))


def run_sweep(
    prog: ProgramDef,
    x: Sequence,
    v: Optional[Sequence],
    lib: LibraryRegistry,
    variant: Variant = "flat",
    meter: Optional[CostMeter] = None,
    exact: bool = False,
    kink_tol: float = 0.0,
    kink_gradient: Optional[KinkGradient] = None,
) -> ASDResult:
    """Shared driver for every engine entry point.

    ``v=None`` runs without duals (sign(0) = +1 at every test). In the nested
    variant ``kink_gradient`` may replace a call's gradient whenever one of
    its tests evaluated to exactly zero.
    """
    if variant not in VARIANTS + ("reverse",):
        raise ValueError(f"unknown variant '{variant}'")
    _check_dims(prog.input_arity, x, v)
    meter = meter if meter is not None else CostMeter()
    sweep = _Sweep(meter, exact, v is not None, kink_tol)
    lift = sweep.lift

    d = prog.input_arity
    inputs = tuple(range(1, d + 1))
    values: Dict[int, object] = {i: lift(t) for i, t in zip(inputs, x)}
    duals: Dict[int, object] = {i: lift(t) for i, t in zip(inputs, v)} if v is not None else {}
    tape = Tape(inputs, exact=exact)
    node_map: Dict[int, int] = {i: i for i in inputs}
    fresh = count(d + 1)
    calls: List[CallRecord] = []

    for assignment in prog.assignments:
        instr = assignment.instruction
        k = assignment.target
        if not isinstance(instr, LibCall):
            target = next(fresh)
            sweep.primitive(instr, node_map, values, duals, tape, target)
            node_map[k] = target
            continue

        fn = _resolve(lib, instr, k)
        arg_ids = [node_map[j] for j in instr.args]
        args = tuple(Dual(values[t], duals.get(t)) for t in arg_ids)
        if variant != "nested":
            ids = {i + 1: t for i, t in enumerate(arg_ids)}
            out, trace, ties = sweep.walk(fn, ids, values, duals, tape, lambda _: next(fresh))
            node_map[k] = out
            calls.append(CallRecord(k, fn.name, args, trace, ties))
        else:
            a, dd, u, local, trace, ties = _library_subroutine(
                sweep, fn, [arg.a for arg in args], [arg.d for arg in args] if v is not None else None
            )
            replay: Optional[Tape] = local
            if ties and kink_gradient is not None:
                override = kink_gradient(fn, tuple(arg.a for arg in args))
                if override is not None:
                    u = tuple(lift(c) for c in override)
                    replay = None
            target = next(fresh)
            values[target] = a
            if v is not None:
                duals[target] = dd
            tape.append(TapeRecord(target, a, tuple(zip(arg_ids, u)), replay))
            if replay is not None and local.output in local.inputs:
                # the call returned an argument; consumers read that node, as in the flat tape
                node_map[k] = arg_ids[local.inputs.index(local.output)]
            else:
                node_map[k] = target
            calls.append(CallRecord(k, fn.name, args, trace, ties, tuple(u), local))

    out = node_map[prog.output]
    tape.output = out
    gradient = reverse_mode(tape, meter)
    cost = CostReport.from_meters(sweep.f_meter, meter)
    logger.debug(
        f"{variant} sweep of '{prog.name}': {len(calls)} call(s), "
        f"{len(tape)} record(s), cost {cost.runtime_asd}/{cost.runtime_f}"
    )
    return ASDResult(values[out], duals.get(out), gradient, cost, variant, tuple(calls), tape)


def asd_program(prog, x, v, lib, meter=None, exact=False, kink_tol=0.0) -> ASDResult:
    """Call-granularity variant: each library call is one tape node carrying its gradient."""
    return run_sweep(prog, x, v, lib, "nested", meter, exact, kink_tol)


def asd_program_flat(prog, x, v, lib, meter=None, exact=False, kink_tol=0.0) -> ASDResult:
    """Unravelled variant: library paths are spliced into one global tape."""
    return run_sweep(prog, x, v, lib, "flat", meter, exact, kink_tol)


def reverse_gradient(prog, x, lib, meter=None, exact=False) -> ASDResult:
    """Plain evaluation plus reverse mode; ties take the ``>= 0`` side and no duals are carried."""
    return run_sweep(prog, x, None, lib, "reverse", meter, exact)
