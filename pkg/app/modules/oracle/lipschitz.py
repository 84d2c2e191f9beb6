import logging
from dataclasses import dataclass
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.modules.asd.sampling import sample_direction
from app.modules.graph.evaluator import evaluate_branch
from app.modules.library.qualification import constraint_points
from app.modules.library.registry import LibraryFunction

logger = logging.getLogger(__name__)

SCALES = (1e-1, 1e-3, 1e-6, 1e-9)


@dataclass(frozen=True)
class LipschitzEstimate:
    constant: float
    pairs: int
    witness: Optional[Tuple[Tuple[float, ...], Tuple[float, ...]]] = None

    @property
    def violated(self) -> bool:
        return self.witness is not None


def _box(region, arity: int) -> Tuple[np.ndarray, np.ndarray]:
    lo, hi = region
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (arity,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (arity,)).copy()
    if np.any(hi <= lo):
        raise ValueError("region bounds must satisfy lo < hi in every coordinate")
    return lo, hi


def lipschitz_probe(
    g: LibraryFunction,
    region: Sequence = (-1.0, 1.0),
    samples: int = 1000,
    seed: int = 0,
    cap: float = 1e6,
) -> LipschitzEstimate:
    """Largest sampled ``|g(x) - g(y)| / |x - y|`` over close pairs in a box.

    Base points are the box corners, points on constraint zero sets inside
    the box and uniform draws; partners sit at distances from 1e-1 down to
    1e-9 and are reflected back into the box when they leave it. A quotient
    above ``cap`` is reported with its pair as a violation witness.
    """
    lo, hi = _box(region, g.arity)
    rng = np.random.default_rng(seed)

    bases: List[np.ndarray] = [np.array(c, dtype=float) for c in product(*zip(lo, hi))]
    for p in constraint_points(g, rng):
        arr = np.array([float(t) for t in p])
        if np.all(arr >= lo) and np.all(arr <= hi):
            bases.append(arr)
    while len(bases) < samples:
        bases.append(rng.uniform(lo, hi))

    best = 0.0
    witness = None
    pairs = 0
    for x in bases:
        for r in SCALES:
            step = r * np.asarray(sample_direction(g.arity, rng))
            y = x + step
            if np.any(y < lo) or np.any(y > hi):
                y = x - step
            dist = float(np.linalg.norm(x - y))
            if dist == 0.0:
                continue
            gx = float(evaluate_branch(g.program, list(x)).value)
            gy = float(evaluate_branch(g.program, list(y)).value)
            q = abs(gx - gy) / dist
            pairs += 1
            if q > best:
                best = q
                if q > cap:
                    witness = (tuple(map(float, x)), tuple(map(float, y)))
    if witness is not None:
        logger.warning(f"'{g.name}' looks non-Lipschitz: difference quotient {best:.3g} exceeds {cap:g}")
    return LipschitzEstimate(best, pairs, witness)
