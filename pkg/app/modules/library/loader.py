import logging
from typing import List, Optional, Tuple

from app.exceptions import LibraryDefinitionError
from app.modules.graph.parser import LibraryDecl, ParsedSource, PiecewiseDecl, parse_program
from app.modules.graph.program import ProgramDef
from app.modules.library.piecewise import make_piecewise_poly
from app.modules.library.registry import LibraryFunction, LibraryRegistry, builtin_registry

logger = logging.getLogger(__name__)


def definitions_to_functions(parsed: ParsedSource) -> List[LibraryFunction]:
    functions: List[LibraryFunction] = []
    for decl in parsed.definitions:
        if isinstance(decl, LibraryDecl):
            functions.append(LibraryFunction(decl.name, decl.arity, decl.program, decl.claims_qualified))
        elif isinstance(decl, PiecewiseDecl):
            functions.append(make_piecewise_poly(decl.name, decl.breakpoints, decl.pieces))
    return functions


def load_source(
    text: str,
    name: str = "program",
    cq_check: bool = True,
    samples: int = 64,
    seed: int = 0,
    base: Optional[LibraryRegistry] = None,
) -> Tuple[Optional[ProgramDef], LibraryRegistry]:
    """Parse a program file and register its library definitions on top of the builtins."""
    parsed = parse_program(text, name)
    registry = base if base is not None else builtin_registry()
    functions = definitions_to_functions(parsed)
    for fn in functions:
        if fn.name in registry:
            raise LibraryDefinitionError(fn.name, ["name already registered"])
    if functions:
        registry = registry.with_functions(functions, cq_check=cq_check, samples=samples, seed=seed)
        logger.info(f"Loaded {len(functions)} library definition(s) from '{name}'")
    return parsed.program, registry
