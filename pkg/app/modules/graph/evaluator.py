import logging
from typing import TYPE_CHECKING, Dict, List, NamedTuple, Optional, Sequence, Tuple

from app.exceptions import DimensionMismatchError, ProgramError
from app.modules.graph.program import (
    Affine,
    Branch,
    BranchProgram,
    BranchTrace,
    Compute,
    CostMeter,
    LibCall,
    Monomial,
    ProgramDef,
    Return,
)
from app.modules.graph.semantics import affine_value, lift_for, monomial_value

if TYPE_CHECKING:
    from app.modules.library.registry import LibraryRegistry

logger = logging.getLogger(__name__)


class Evaluation(NamedTuple):
    value: object
    traces: Tuple[BranchTrace, ...]


class BranchEvaluation(NamedTuple):
    value: object
    trace: BranchTrace


def _primitive(instr, values: Dict[int, object], lift, meter: CostMeter):
    if isinstance(instr, Affine):
        return affine_value(instr, values, lift, meter)
    if isinstance(instr, Monomial):
        return monomial_value(instr, values, lift, meter)
    raise ProgramError(f"unsupported primitive instruction {instr!r}")


def evaluate_branch(
    bp: BranchProgram,
    x: Sequence,
    meter: Optional[CostMeter] = None,
    exact: bool = False,
) -> BranchEvaluation:
    """Run a library program with ``x_k >= 0`` taking the then-branch."""
    if len(x) != bp.input_arity:
        raise DimensionMismatchError(f"expected {bp.input_arity} input(s), got {len(x)}")
    meter = meter if meter is not None else CostMeter()
    lift = lift_for(exact)
    values: Dict[int, object] = {i + 1: lift(xi) for i, xi in enumerate(x)}
    word: List[int] = []
    step = bp.body
    while not isinstance(step, Return):
        if isinstance(step, Compute):
            values[step.target] = _primitive(step.instruction, values, lift, meter)
            step = step.next
        elif isinstance(step, Branch):
            meter.charge(branch_tests=1)
            if values[step.test] >= 0:
                word.append(1)
                step = step.then
            else:
                word.append(-1)
                step = step.otherwise
        else:
            raise ProgramError(f"unknown step {step!r}")
    return BranchEvaluation(values[step.node], BranchTrace(tuple(word)))


def evaluate(
    prog: ProgramDef,
    x: Sequence,
    lib: "LibraryRegistry",
    meter: Optional[CostMeter] = None,
    exact: bool = False,
) -> Evaluation:
    """Straight-line evaluation; each library call records its branch word."""
    if len(x) != prog.input_arity:
        raise DimensionMismatchError(f"expected {prog.input_arity} input(s), got {len(x)}")
    meter = meter if meter is not None else CostMeter()
    lift = lift_for(exact)
    values: Dict[int, object] = {i + 1: lift(xi) for i, xi in enumerate(x)}
    traces: List[BranchTrace] = []
    for a in prog.assignments:
        instr = a.instruction
        if isinstance(instr, LibCall):
            fn = lib.get(instr.name)
            if fn is None:
                raise ProgramError(f"unknown library function '{instr.name}' at node {a.target}")
            if fn.arity != len(instr.args):
                raise ProgramError(
                    f"arity mismatch at node {a.target}: '{instr.name}' expects {fn.arity}, got {len(instr.args)}"
                )
            result = evaluate_branch(fn.program, [values[j] for j in instr.args], meter, exact)
            values[a.target] = result.value
            traces.append(result.trace)
        else:
            values[a.target] = _primitive(instr, values, lift, meter)
    return Evaluation(values[prog.output], tuple(traces))
