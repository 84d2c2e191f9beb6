from typing import NamedTuple


class Dual(NamedTuple):
    """A primal value ``a`` paired with its one-sided directional derivative ``d``."""

    a: object
    d: object
