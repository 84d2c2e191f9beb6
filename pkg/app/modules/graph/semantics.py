"""Primitive instruction semantics and the unit-cost rules shared by every pass.

Evaluation order is fixed so that floating-point results are reproducible:
affine nodes accumulate left to right starting from the constant, monomials
raise each factor by repeated multiplication, multiply the powers left to
right and apply the coefficient last.

Every charge below is the number of multiplications and additions the code
actually performs. Products of program constants (``c * e`` for a monomial
partial) are folded when the instruction is lifted and are not charged.
"""

from fractions import Fraction
from typing import Callable, Dict, List, Mapping, NamedTuple, Optional, Tuple

from app.modules.graph.program import Affine, CostMeter, Monomial

Lift = Callable[[Fraction], object]


class MonomialProducts(NamedTuple):
    """Intermediates of one monomial evaluation, kept for its partials."""

    value: object
    powers: Tuple[object, ...]
    lowered: Tuple[Optional[object], ...]  # x^(e-1), None when e == 1
    prefix: Tuple[object, ...]  # prefix[i] = powers[0] * ... * powers[i]


def lift_for(exact: bool) -> Lift:
    return Fraction if exact else float


def affine_cost(instr: Affine) -> Tuple[int, int]:
    """(multiplications, additions)"""
    m = len(instr.terms)
    return m, m


def monomial_cost(instr: Monomial) -> int:
    """Multiplications: e-1 per power, one per product of powers, one for the coefficient."""
    if not instr.factors:
        return 0
    return instr.total_degree


def monomial_partial_cost(instr: Monomial) -> int:
    """One per factor with e > 1, and for k >= 2 factors 3k - 4 for the cofactors.

    The cofactor of factor i is ``prefix[i-1] * suffix[i+1]``: the suffix
    products take k - 2 multiplications, the inner cofactors another k - 2,
    and scaling each partial by its cofactor one more per factor.
    """
    k = len(instr.factors)
    scaled = sum(1 for _, e in instr.factors if e > 1)
    if k < 2:
        return scaled
    return scaled + 3 * k - 4


def affine_value(instr: Affine, values: Mapping[int, object], lift: Lift, meter: CostMeter):
    acc = lift(instr.constant)
    for c, j in instr.terms:
        acc = acc + lift(c) * values[j]
    meter.charge(*affine_cost(instr))
    return acc


def monomial_products(
    instr: Monomial, values: Mapping[int, object], lift: Lift, meter: CostMeter
) -> MonomialProducts:
    coefficient = lift(instr.coefficient)
    if not instr.factors:
        return MonomialProducts(coefficient, (), (), ())
    powers, lowered, prefix = [], [], []
    for j, e in instr.factors:
        base = values[j]
        p, below = base, None
        for _ in range(e - 1):
            below = p
            p = p * base
        powers.append(p)
        lowered.append(below)
        prefix.append(p if not prefix else prefix[-1] * p)
    meter.charge(multiplications=monomial_cost(instr))
    return MonomialProducts(coefficient * prefix[-1], tuple(powers), tuple(lowered), tuple(prefix))


def monomial_value(instr: Monomial, values: Mapping[int, object], lift: Lift, meter: CostMeter):
    return monomial_products(instr, values, lift, meter).value


def affine_partials(instr: Affine, lift: Lift) -> List[Tuple[int, object]]:
    return [(j, lift(c)) for c, j in instr.terms]


def monomial_partials(
    instr: Monomial, products: MonomialProducts, lift: Lift, meter: CostMeter
) -> List[Tuple[int, object]]:
    """Local partials, one per factor occurrence (repeated nodes give repeated entries)."""
    k = len(instr.factors)
    powers, prefix = products.powers, products.prefix
    suffix: List[Optional[object]] = [None] * k
    if k >= 2:
        suffix[k - 1] = powers[k - 1]
        for i in range(k - 2, 0, -1):
            suffix[i] = powers[i] * suffix[i + 1]

    out: List[Tuple[int, object]] = []
    for i, (j, e) in enumerate(instr.factors):
        partial = lift(instr.coefficient * e)
        if e > 1:
            partial = partial * products.lowered[i]
        if k >= 2:
            if i == 0:
                cofactor = suffix[1]
            elif i == k - 1:
                cofactor = prefix[k - 2]
            else:
                cofactor = prefix[i - 1] * suffix[i + 1]
            partial = partial * cofactor
        out.append((j, partial))
    meter.charge(multiplications=monomial_partial_cost(instr))
    return out


def directional(partials: List[Tuple[int, object]], duals: Dict[int, object], zero, meter: CostMeter):
    """Forward-mode tangent: sum of partial * parent tangent, one mul+add per partial."""
    acc = zero
    for j, p in partials:
        acc = acc + p * duals[j]
    meter.charge(multiplications=len(partials), additions=len(partials))
    return acc
