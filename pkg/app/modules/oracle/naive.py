"""Fixed-convention baseline: what frameworks that pick one derivative per kink report."""

import logging
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Sequence, Tuple

from app.exceptions import MissingConventionError
from app.modules.asd.engine import ASDResult, run_sweep
from app.modules.graph.program import ProgramDef
from app.modules.library.registry import LibraryFunction, LibraryRegistry

logger = logging.getLogger(__name__)

DEFAULT_KINKS: Dict[str, Tuple[float, ...]] = {
    "relu": (0,),
    "relu_bad": (0,),
    "abs": (1,),
    "max2": (1, 0),
    "min2": (1, 0),
}


@dataclass(frozen=True)
class NaiveConvention:
    """Local gradient used whenever a library call evaluates one of its tests at exactly zero.

    Functions without an entry use the gradient of the branch taken under
    sign(0) = +1 when ``smooth_fallback`` is set; otherwise they are an error.
    """

    kinks: Mapping[str, Tuple[float, ...]] = field(default_factory=lambda: dict(DEFAULT_KINKS))
    smooth_fallback: bool = True

    @classmethod
    def with_relu_zero(cls, value, smooth_fallback: bool = True) -> "NaiveConvention":
        kinks = dict(DEFAULT_KINKS)
        kinks["relu"] = (value,)
        kinks["relu_bad"] = (value,)
        return cls(kinks, smooth_fallback)

    def covers(self, name: str) -> bool:
        return name in self.kinks or self.smooth_fallback

    def gradient_for(self, fn: LibraryFunction, args: Tuple[object, ...]) -> Optional[Sequence]:
        if fn.name in self.kinks:
            return self.kinks[fn.name]
        if self.smooth_fallback:
            return None
        raise MissingConventionError(fn.name)


def naive_ad(
    prog: ProgramDef,
    x: Sequence,
    lib: LibraryRegistry,
    convention: Optional[NaiveConvention] = None,
    exact: bool = False,
) -> ASDResult:
    """Evaluate with sign(0) = +1 and back-propagate fixed kink derivatives; no direction is used."""
    convention = convention or NaiveConvention()
    for call in prog.lib_calls:
        if not convention.covers(call.name):
            raise MissingConventionError(call.name)
    result = run_sweep(prog, x, None, lib, "nested", exact=exact, kink_gradient=convention.gradient_for)
    logger.debug(f"naive gradient of '{prog.name}' at {list(x)}: {result.gradient}")
    return result
