"""Limiting gradients along rays and Clarke-hull membership by sampling.

The gradient at ``x + delta v`` is taken from the engine. Where no branch
test evaluates to zero it must match plain reverse mode, which is checked on
every such step. Steps that land on a kink are resolved by the engine along
``v``; estimates built from them are counted so a verdict can be traced back
to them.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import nnls

from app.exceptions import OracleError
from app.modules.asd.engine import asd_program_flat, reverse_gradient
from app.modules.asd.sampling import sample_direction
from app.modules.graph.program import ProgramDef
from app.modules.library.registry import LibraryRegistry
from app.modules.oracle.finite_difference import FDSchedule

logger = logging.getLogger(__name__)


class LimitingSample(NamedTuple):
    gradient: Tuple[float, ...]
    kink_steps: int  # steps behind the estimate that the engine resolved at a kink


def sample_limiting_gradient(
    prog: ProgramDef,
    x: Sequence,
    v: Sequence,
    lib: LibraryRegistry,
    schedule: Optional[FDSchedule] = None,
    exact: bool = False,
) -> LimitingSample:
    """Extrapolated ``lim_{delta -> 0+} grad f(x + delta v)``."""
    schedule = schedule or FDSchedule()
    if exact:
        xs = [Fraction(a) for a in x]
        vs = [Fraction(b) for b in v]
        steps = [Fraction(h).limit_denominator(10**12) for h in schedule.steps]
    else:
        xs = [float(a) for a in x]
        vs = [float(b) for b in v]
        steps = list(schedule.steps)

    samples = []
    for delta in steps:
        y = [a + delta * b for a, b in zip(xs, vs)]
        result = asd_program_flat(prog, y, vs, lib, exact=exact)
        if result.tie_count:
            # ties that persist along the ray come from locally constant nodes
            logger.debug(f"step {float(delta):g} lands on a kink of '{prog.name}'; resolved along v")
        else:
            plain = reverse_gradient(prog, y, lib, exact=exact)
            if plain.gradient != result.gradient or plain.traces != result.traces:
                raise OracleError(
                    f"engine and plain reverse mode disagree at a resolved point of '{prog.name}': "
                    f"{result.gradient} vs {plain.gradient}"
                )
        samples.append((delta, result.gradient, result.traces, result.tie_count > 0))

    delta_2, g_2, t_2, kink_2 = samples[-1]
    if len(samples) == 1 or samples[-2][2] != t_2:
        return LimitingSample(tuple(float(g) for g in g_2), int(kink_2))
    delta_1, g_1, _, kink_1 = samples[-2]
    r = delta_1 / delta_2
    return LimitingSample(
        tuple(float((r * b - a) / (r - 1)) for a, b in zip(g_1, g_2)), int(kink_1) + int(kink_2)
    )


def limiting_gradient(
    prog: ProgramDef,
    x: Sequence,
    v: Sequence,
    lib: LibraryRegistry,
    schedule: Optional[FDSchedule] = None,
    exact: bool = False,
) -> Tuple[float, ...]:
    return sample_limiting_gradient(prog, x, v, lib, schedule, exact).gradient


@dataclass(frozen=True)
class HullCheck:
    member: bool
    distance: float
    vertices: Tuple[Tuple[float, ...], ...]
    directions: int
    inconclusive: bool = False
    kink_directions: int = 0

    def describe(self) -> str:
        if self.inconclusive:
            return "inconclusive: no limiting gradient could be sampled"
        verdict = "member" if self.member else "nonmember"
        text = f"{verdict} (distance {self.distance:.3g}, {len(self.vertices)} vertices from {self.directions} directions"
        if self.kink_directions:
            text += f", {self.kink_directions} resolved on kinks"
        return text + ")"


def dedup(points: Sequence[Sequence[float]], tol: float) -> List[Tuple[float, ...]]:
    out: List[Tuple[float, ...]] = []
    for p in points:
        arr = np.asarray(p, dtype=float)
        if not any(np.max(np.abs(arr - np.asarray(q))) <= tol for q in out):
            out.append(tuple(float(t) for t in arr))
    return out


def hull_distance(vertices: Sequence[Sequence[float]], u: Sequence[float], tol: float = 1e-6) -> float:
    """Euclidean distance from ``u`` to conv(vertices).

    A non-negative least-squares solve with a heavily weighted sum-to-one
    row gives the starting weights; Frank-Wolfe steps on the simplex then
    refine them until the duality gap falls below ``(tol / 10) ** 2``.
    """
    G = np.asarray(vertices, dtype=float).T
    target = np.asarray(u, dtype=float)
    k = G.shape[1]
    weight = 1e4
    A = np.r_[G, weight * np.ones((1, k))]
    b = np.r_[target, weight]
    w, _ = nnls(A, b)
    w = w / w.sum() if w.sum() > 0 else np.full(k, 1.0 / k)

    gap_tol = (tol / 10) ** 2
    for _ in range(10_000):
        residual = G @ w - target
        grad = G.T @ residual
        i = int(np.argmin(grad))
        gap = float(grad @ w - grad[i])
        if gap <= gap_tol:
            break
        direction = -w.copy()
        direction[i] += 1.0
        step_vec = G @ direction
        denom = float(step_vec @ step_vec)
        if denom == 0.0:
            break
        step = min(1.0, max(0.0, -float(residual @ step_vec) / denom))
        w = w + step * direction
    return float(np.linalg.norm(G @ w - target))


def clarke_hull_check(
    prog: ProgramDef,
    x: Sequence,
    u: Sequence,
    lib: LibraryRegistry,
    n_dirs: int = 32,
    tol: float = 1e-6,
    seed: int = 0,
    v: Optional[Sequence] = None,
    dedup_tol: float = 1e-8,
) -> HullCheck:
    """Is ``u`` within ``tol`` of the hull of sampled limiting gradients at ``x``?

    Directions are the coordinate axes in both signs, ``n_dirs`` random unit
    vectors and the query direction when given. A pass is evidence, not a
    certificate.
    """
    d = prog.input_arity
    rng = np.random.default_rng(seed)
    directions: List[Tuple[float, ...]] = []
    for i in range(d):
        for s in (1.0, -1.0):
            e = [0.0] * d
            e[i] = s
            directions.append(tuple(e))
    directions.extend(sample_direction(d, rng) for _ in range(n_dirs))
    if v is not None:
        directions.append(tuple(float(t) for t in v))

    gradients = []
    kink_directions = 0
    for direction in directions:
        try:
            sample = sample_limiting_gradient(prog, x, direction, lib)
        except OracleError as exc:
            logger.debug(f"direction {direction} skipped: {exc}")
            continue
        gradients.append(sample.gradient)
        kink_directions += sample.kink_steps > 0
    vertices = dedup(gradients, dedup_tol)
    if not vertices:
        return HullCheck(False, float("inf"), (), len(directions), inconclusive=True)
    distance = hull_distance(vertices, [float(t) for t in u], tol)
    return HullCheck(distance <= tol, distance, tuple(vertices), len(directions), kink_directions=kink_directions)
