import logging
from typing import TYPE_CHECKING, List, Optional, Set

from app.modules.graph.graph_builder import build_program_graph, detect_cycles, find_dead_nodes
from app.modules.graph.program import (
    Affine,
    Branch,
    BranchProgram,
    Compute,
    Instruction,
    LibCall,
    Monomial,
    ProgramDef,
    Return,
    ValidationReport,
    iter_paths,
)

if TYPE_CHECKING:
    from app.modules.library.registry import LibraryRegistry

logger = logging.getLogger(__name__)


def _check_reads(
    node: int, instr: Instruction, defined: Set[int], violations: List[str]
) -> None:
    for j in instr.parents:
        if j >= node:
            violations.append(f"forward reference at node {node}: reads n{j}")
        elif j not in defined:
            violations.append(f"undefined node n{j} read at node {node}")
    if isinstance(instr, Monomial):
        for j, e in instr.factors:
            if e < 1:
                violations.append(f"non-positive exponent {e} on n{j} at node {node}")


def validate(prog: ProgramDef, lib: Optional["LibraryRegistry"] = None) -> ValidationReport:
    """Check SSA order, library names and arities, and the output index.

    Violations are returned, never raised.
    """
    violations: List[str] = []
    warnings: List[str] = []

    if prog.input_arity < 1:
        violations.append(f"input arity must be positive, got {prog.input_arity}")

    defined: Set[int] = set(range(1, prog.input_arity + 1))
    last = prog.input_arity
    for a in prog.assignments:
        if a.target <= last:
            violations.append(f"node {a.target} defined out of order (after n{last})")
        _check_reads(a.target, a.instruction, defined, violations)
        instr = a.instruction
        if isinstance(instr, LibCall):
            fn = lib.get(instr.name) if lib is not None else None
            if fn is None:
                violations.append(f"unknown library function '{instr.name}' at node {a.target}")
            elif fn.arity != len(instr.args):
                violations.append(
                    f"arity mismatch at node {a.target}: '{instr.name}' expects "
                    f"{fn.arity} argument(s), got {len(instr.args)}"
                )
        defined.add(a.target)
        last = max(last, a.target)

    if prog.output not in defined:
        violations.append(f"undefined output n{prog.output}")

    graph = build_program_graph(prog)
    for cycle in detect_cycles(graph):
        violations.append("cyclic dependency through " + " -> ".join(f"n{k}" for k in cycle))
    dead = sorted(find_dead_nodes(graph, prog.output))
    if dead:
        warnings.append("nodes not feeding the output: " + ", ".join(f"n{k}" for k in dead))

    if violations:
        logger.debug(f"Program '{prog.name}' has {len(violations)} violation(s)")
    return ValidationReport(tuple(violations), tuple(warnings))


def validate_branch_program(bp: BranchProgram, max_steps: int = 100_000) -> ValidationReport:
    """Per-path SSA checks for a library program.

    Each branch must test the node computed just before it (any input when
    nothing has been computed yet on the path), and library bodies may only
    contain affine and monomial instructions.
    """
    violations: List[str] = []
    if bp.input_arity < 1:
        violations.append(f"input arity must be positive, got {bp.input_arity}")

    for path in iter_paths(bp.body):
        defined: Set[int] = set(range(1, bp.input_arity + 1))
        last_computed: Optional[int] = None
        last = bp.input_arity
        for step in path:
            if isinstance(step, Compute):
                instr = step.instruction
                if isinstance(instr, LibCall):
                    violations.append(f"library call '{instr.name}' inside a library body at node {step.target}")
                elif not isinstance(instr, (Affine, Monomial)):
                    violations.append(f"unsupported instruction at node {step.target}")
                if step.target <= last:
                    violations.append(f"node {step.target} defined out of order (after n{last})")
                _check_reads(step.target, instr, defined, violations)
                defined.add(step.target)
                last = max(last, step.target)
                last_computed = step.target
            elif isinstance(step, Branch):
                if step.test not in defined:
                    violations.append(f"branch tests undefined node n{step.test}")
                elif last_computed is not None and step.test != last_computed:
                    violations.append(
                        f"branch tests n{step.test} but the most recent node is n{last_computed}"
                    )
            elif isinstance(step, Return):
                if step.node not in defined:
                    violations.append(f"return of undefined node n{step.node}")

    if bp.step_bound > max_steps:
        violations.append(f"longest path has {bp.step_bound} steps, exceeding the step bound {max_steps}")

    # paths share prefixes, so the same problem can be reported more than once
    unique = tuple(dict.fromkeys(violations))
    return ValidationReport(unique, ())
