import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from app.exceptions import DSLParseError, DimensionMismatchError
from app.modules.graph.program import ProgramDef
from app.modules.library.loader import load_source
from app.modules.library.registry import LibraryRegistry

logger = logging.getLogger(__name__)

Vector = Tuple[Fraction, ...]


@dataclass(frozen=True)
class QueryPoint:
    x: Vector
    v: Optional[Vector] = None


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    path: str
    program: ProgramDef
    registry: LibraryRegistry
    points: Tuple[QueryPoint, ...]


def find_program_files(base_path: str, recursive: bool = False) -> List[str]:
    prog_files = []
    for root, dirs, files in os.walk(base_path):
        for f in files:
            if f.endswith(".prog"):
                prog_files.append(os.path.abspath(os.path.join(root, f)))
        if not recursive:
            dirs.clear()
    return sorted(prog_files)


def parse_vector(text: str) -> Vector:
    """Comma-separated decimals or ``p/q`` rationals, parsed exactly."""
    parts = [p.strip() for p in text.split(",")]
    if not parts or any(p == "" for p in parts):
        raise ValueError(f"malformed vector '{text}'")
    try:
        return tuple(Fraction(p) for p in parts)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"malformed vector '{text}'")


def parse_points(text: str, arity: Optional[int] = None) -> Tuple[QueryPoint, ...]:
    """``at <csv> [dir <csv>]`` per line; ``#`` starts a comment."""
    points = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        words = raw.split("#", 1)[0].split()
        if not words:
            continue
        if words[0] != "at" or len(words) not in (2, 4) or (len(words) == 4 and words[2] != "dir"):
            raise DSLParseError("expected 'at <x> [dir <v>]'", lineno)
        try:
            x = parse_vector(words[1])
            v = parse_vector(words[3]) if len(words) == 4 else None
        except ValueError as exc:
            raise DSLParseError(str(exc), lineno)
        if arity is not None and (len(x) != arity or (v is not None and len(v) != arity)):
            raise DimensionMismatchError(f"line {lineno}: expected {arity}-dimensional vectors")
        points.append(QueryPoint(x, v))
    return tuple(points)


def load_corpus_entry(path: str, cq_check: bool = True) -> CorpusEntry:
    name = os.path.splitext(os.path.basename(path))[0]
    with open(path, "r", encoding="utf-8") as f:
        program, registry = load_source(f.read(), name, cq_check=cq_check)
    if program is None:
        raise DSLParseError(f"{path} declares no program", 1)
    points: Tuple[QueryPoint, ...] = ()
    points_path = os.path.splitext(path)[0] + ".points"
    if os.path.exists(points_path):
        with open(points_path, "r", encoding="utf-8") as f:
            points = parse_points(f.read(), program.input_arity)
    else:
        logger.info(f"No .points file next to {path}")
    return CorpusEntry(name, path, program, registry, points)


def load_corpus(directory: str, cq_check: bool = True) -> List[CorpusEntry]:
    entries = [load_corpus_entry(p, cq_check) for p in find_program_files(directory)]
    logger.info(f"Loaded {len(entries)} corpus program(s) from {directory}")
    return entries
