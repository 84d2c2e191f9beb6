"""Random directions and the seeded subgradient entry point.

Directions are drawn with numpy's ``default_rng(seed)`` (PCG64): a standard
normal vector divided by its Euclidean norm, redrawn if the norm is zero.
The same seed gives the same direction on every platform.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.modules.asd.engine import ASDResult, asd_program_flat, run_sweep
from app.modules.graph.program import ProgramDef
from app.modules.library.registry import LibraryRegistry

logger = logging.getLogger(__name__)


def sample_direction(dim: int, rng: np.random.Generator) -> Tuple[float, ...]:
    if dim < 1:
        raise ValueError(f"direction dimension must be positive, got {dim}")
    while True:
        draw = rng.standard_normal(dim)
        norm = np.linalg.norm(draw)
        if norm > 0:
            return tuple(float(t) for t in draw / norm)


def direction_for_seed(dim: int, seed: int) -> Tuple[float, ...]:
    return sample_direction(dim, np.random.default_rng(seed))


@dataclass(frozen=True)
class SubgradientResult:
    seed: int
    direction: Tuple[float, ...]
    result: ASDResult

    @property
    def value(self):
        return self.result.value

    @property
    def gradient(self):
        return self.result.gradient

    @property
    def cost(self):
        return self.result.cost


def subgradient(
    prog: ProgramDef,
    x: Sequence,
    seed: int,
    lib: LibraryRegistry,
    variant: str = "flat",
    exact: bool = False,
    kink_tol: float = 0.0,
) -> SubgradientResult:
    """Clarke subgradient along a direction drawn from ``seed``."""
    v = direction_for_seed(prog.input_arity, seed)
    if variant == "flat":
        result = asd_program_flat(prog, x, v, lib, exact=exact, kink_tol=kink_tol)
    else:
        result = run_sweep(prog, x, v, lib, variant, exact=exact, kink_tol=kink_tol)
    logger.debug(f"seed {seed}: direction {v}, gradient {result.gradient}")
    return SubgradientResult(seed, v, result)


@dataclass(frozen=True)
class CrossCheckReport:
    runs: Tuple[SubgradientResult, ...]
    distinct: Tuple[Tuple[float, ...], ...]
    spread: float

    @property
    def agree(self) -> bool:
        return len(self.distinct) <= 1


def cross_check(
    prog: ProgramDef,
    x: Sequence,
    seeds: Sequence[int],
    lib: LibraryRegistry,
    tol: float = 1e-12,
    variant: str = "flat",
) -> CrossCheckReport:
    """Rerun with independent seeds and collect the distinct subgradients.

    Disagreement is reported, not adjudicated: each answer may be a valid
    Clarke subgradient at a kink.
    """
    runs = tuple(subgradient(prog, x, s, lib, variant) for s in seeds)
    grads = np.array([[float(g) for g in r.gradient] for r in runs], dtype=float)
    distinct: List[Tuple[float, ...]] = []
    for row in grads:
        if not any(np.max(np.abs(row - np.array(seen))) <= tol for seen in distinct):
            distinct.append(tuple(float(t) for t in row))
    spread = float(np.max(grads.max(axis=0) - grads.min(axis=0))) if len(runs) else 0.0
    if len(distinct) > 1:
        logger.info(f"cross-check on '{prog.name}': {len(distinct)} distinct subgradients over {len(runs)} seeds")
    return CrossCheckReport(runs, tuple(distinct), spread)


def seeds_from(base: Optional[int], k: int) -> List[int]:
    """``k`` consecutive seeds starting at ``base`` (0 when absent)."""
    start = base or 0
    return [(start + i) % 2**64 for i in range(k)]
