"""Helpers shared by the command handlers: program loading, vectors, directions."""

import argparse
import logging
import os
from fractions import Fraction
from typing import Optional, Tuple

from app.config import Settings, get_settings
from app.exceptions import CommandError, DSLParseError, DimensionMismatchError
from app.modules.asd.sampling import direction_for_seed
from app.modules.corpus.scanner import parse_vector
from app.modules.graph.program import ProgramDef
from app.modules.graph.validator import validate
from app.modules.library.loader import load_source
from app.modules.library.registry import LibraryRegistry

logger = logging.getLogger(__name__)


def common_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--json", action="store_true", help="Print the report as JSON")
    parent.add_argument(
        "--no-cq-check",
        action="store_true",
        help="Skip the sampled constraint qualification check on deflib functions",
    )
    parent.add_argument("--kink-tol", type=float, default=None, help="Treat |x_k| <= tol as a tie")
    return parent


def query_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("file", help="Program file")
    parent.add_argument("--at", required=True, help="Input point, comma separated (use --at=-1,2 for negatives)")
    group = parent.add_mutually_exclusive_group()
    group.add_argument("--seed", type=int, default=None, help="Seed for the random direction")
    group.add_argument("--dir", default=None, help="Explicit direction, comma separated")
    return parent


def load_program(
    path: str, cq_check: bool = True, settings: Optional[Settings] = None
) -> Tuple[ProgramDef, LibraryRegistry]:
    settings = settings or get_settings()
    if not os.path.exists(path):
        raise CommandError(1, f"File {path} does not exist")
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    name = os.path.splitext(os.path.basename(path))[0]
    program, registry = load_source(
        text, name, cq_check=cq_check, samples=settings.cq_samples, seed=settings.default_seed
    )
    if program is None:
        raise DSLParseError("no program: missing 'inputs' declaration", 1)
    report = validate(program, registry)
    if not report.ok:
        raise CommandError(1, f"invalid program {name}: " + "; ".join(report.violations))
    for warning in report.warnings:
        logger.warning(f"{name}: {warning}")
    return program, registry


def parse_point(text: str, arity: int, what: str = "point") -> Tuple[Fraction, ...]:
    try:
        vec = parse_vector(text)
    except ValueError as exc:
        raise CommandError(2, f"malformed {what}: {exc}")
    if len(vec) != arity:
        raise DimensionMismatchError(f"the program takes {arity} input(s), the {what} has {len(vec)}")
    return vec


def resolve_direction(
    args: argparse.Namespace, arity: int, settings: Optional[Settings] = None
) -> Tuple[Tuple[Fraction, ...], Optional[int]]:
    """``--dir`` when given, otherwise the direction drawn from ``--seed`` (or the default seed)."""
    if getattr(args, "dir", None):
        return parse_point(args.dir, arity, "direction"), None
    settings = settings or get_settings()
    seed = args.seed if getattr(args, "seed", None) is not None else settings.default_seed
    v = direction_for_seed(arity, seed)
    return tuple(Fraction(t) for t in v), seed


def kink_tol(args: argparse.Namespace, settings: Optional[Settings] = None) -> float:
    if getattr(args, "kink_tol", None) is not None:
        return args.kink_tol
    return (settings or get_settings()).kink_tol


def floats(values) -> list:
    return [float(t) for t in values]
