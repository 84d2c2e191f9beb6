"""Exact sparse multivariate polynomials over the rationals.

A polynomial in ``n`` variables maps exponent tuples (one non-negative int per
variable) to ``Fraction`` coefficients. Zero coefficients are never stored, so
the zero polynomial has no terms.

    x1^2 * x2 + 3  ->  {(2, 1): Fraction(1), (0, 0): Fraction(3)}

Evaluation follows the type of the point: a point of Fractions gives an exact
Fraction, a float point gives a float.
"""

from __future__ import annotations

from fractions import Fraction
from types import MappingProxyType
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

from app.exceptions import PolynomialBlowupError

Exponent = Tuple[int, ...]
Scalar = Union[int, Fraction]


def _canonical(terms: Mapping[Exponent, Scalar]) -> Dict[Exponent, Fraction]:
    return {mono: Fraction(coeff) for mono, coeff in terms.items() if coeff != 0}


class Polynomial:
    __slots__ = ("n", "_terms")

    def __init__(self, n: int, terms: Optional[Mapping[Exponent, Scalar]] = None):
        if n < 0:
            raise ValueError(f"variable count must be non-negative, got {n}")
        canonical = _canonical(terms or {})
        for mono in canonical:
            if len(mono) != n or any(e < 0 for e in mono):
                raise ValueError(f"invalid exponent vector {mono} for {n} variables")
        self.n = n
        self._terms = MappingProxyType(canonical)

    # -- construction ---------------------------------------------------

    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls(n)

    @classmethod
    def constant(cls, n: int, value: Scalar) -> "Polynomial":
        return cls(n, {(0,) * n: Fraction(value)})

    @classmethod
    def variable(cls, n: int, index: int) -> "Polynomial":
        """The polynomial ``x_{index+1}`` (index is 0-based)."""
        if not 0 <= index < n:
            raise ValueError(f"invalid variable index {index} for {n} variables")
        exp = [0] * n
        exp[index] = 1
        return cls(n, {tuple(exp): Fraction(1)})

    @classmethod
    def univariate(cls, coefficients: Sequence[Scalar]) -> "Polynomial":
        """Build ``c0 + c1 x + c2 x^2 + ...`` from ascending coefficients."""
        return cls(1, {(k,): Fraction(c) for k, c in enumerate(coefficients)})

    # -- inspection -----------------------------------------------------

    @property
    def terms(self) -> Mapping[Exponent, Fraction]:
        return self._terms

    @property
    def num_terms(self) -> int:
        return len(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def degree(self) -> int:
        if not self._terms:
            return 0
        return max(sum(mono) for mono in self._terms)

    def coefficients(self) -> List[Fraction]:
        """Ascending coefficient list of a univariate polynomial."""
        if self.n != 1:
            raise ValueError("coefficients() is only defined for univariate polynomials")
        out = [Fraction(0)] * (self.degree() + 1)
        for (k,), c in self._terms.items():
            out[k] = c
        return out

    # -- arithmetic -----------------------------------------------------

    def _check_same(self, other: "Polynomial") -> None:
        if other.n != self.n:
            raise ValueError(f"variable count mismatch: {self.n} vs {other.n}")

    def _lift(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            self._check_same(other)
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(self.n, other)
        return NotImplemented

    def __add__(self, other) -> "Polynomial":
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self._terms)
        for mono, c in other._terms.items():
            out[mono] = out.get(mono, Fraction(0)) + c
        return Polynomial(self.n, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.n, {mono: -c for mono, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            return Polynomial(self.n, {mono: c * other for mono, c in self._terms.items()})
        if not isinstance(other, Polynomial):
            return NotImplemented
        self._check_same(other)
        out: Dict[Exponent, Fraction] = {}
        for ma, ca in self._terms.items():
            for mb, cb in other._terms.items():
                mono = tuple(a + b for a, b in zip(ma, mb))
                out[mono] = out.get(mono, Fraction(0)) + ca * cb
        return Polynomial(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "Polynomial":
        if not isinstance(exponent, int) or exponent < 0:
            raise ValueError(f"exponent must be a non-negative integer, got {exponent}")
        result = Polynomial.constant(self.n, 1)
        for _ in range(exponent):
            result = result * self
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and dict(self._terms) == dict(other._terms)

    def __hash__(self) -> int:
        return hash((self.n, frozenset(self._terms.items())))

    # -- calculus and evaluation ---------------------------------------

    def evaluate(self, point: Sequence):
        if len(point) != self.n:
            raise ValueError(f"expected {self.n} values, got {len(point)}")
        total = 0
        for mono, c in self._terms.items():
            term = c
            for exp, value in zip(mono, point):
                for _ in range(exp):
                    term = term * value
            total = total + term
        if isinstance(total, int):
            return Fraction(total)
        return total

    def partial(self, index: int) -> "Polynomial":
        out: Dict[Exponent, Fraction] = {}
        for mono, c in self._terms.items():
            e = mono[index]
            if e == 0:
                continue
            lowered = mono[:index] + (e - 1,) + mono[index + 1:]
            out[lowered] = out.get(lowered, Fraction(0)) + c * e
        return Polynomial(self.n, out)

    def gradient(self) -> Tuple["Polynomial", ...]:
        return tuple(self.partial(i) for i in range(self.n))

    def along_line(self, x: Sequence, v: Sequence) -> List[Fraction]:
        """Ascending coefficients in delta of ``self(x + delta * v)``, computed exactly."""
        xs = [Fraction(a) for a in x]
        vs = [Fraction(b) for b in v]
        if len(xs) != self.n or len(vs) != self.n:
            raise ValueError(f"expected {self.n}-dimensional x and v")
        out: List[Fraction] = [Fraction(0)] * (self.degree() + 1)
        for mono, c in self._terms.items():
            line = [c]
            for exp, a, b in zip(mono, xs, vs):
                for _ in range(exp):
                    # multiply by (a + b delta)
                    nxt = [Fraction(0)] * (len(line) + 1)
                    for k, coeff in enumerate(line):
                        nxt[k] += coeff * a
                        nxt[k + 1] += coeff * b
                    line = nxt
            for k, coeff in enumerate(line):
                out[k] += coeff
        return out

    def compose(self, polys: Sequence["Polynomial"], max_terms: Optional[int] = None) -> "Polynomial":
        """Substitute ``polys[i]`` for variable ``i``; all substitutes share one variable count."""
        if len(polys) != self.n:
            raise ValueError(f"expected {self.n} substitutes, got {len(polys)}")
        if not polys:
            raise ValueError("cannot compose a polynomial of zero variables")
        m = polys[0].n
        result = Polynomial.zero(m)
        power_cache: Dict[Tuple[int, int], Polynomial] = {}
        for mono, c in self._terms.items():
            term = Polynomial.constant(m, c)
            for i, e in enumerate(mono):
                if e == 0:
                    continue
                key = (i, e)
                if key not in power_cache:
                    power_cache[key] = polys[i] ** e
                term = term * power_cache[key]
                _guard(term, max_terms)
            result = result + term
            _guard(result, max_terms)
        return result

    # -- formatting -----------------------------------------------------

    def format(self, names: Optional[Sequence[str]] = None) -> str:
        if not self._terms:
            return "0"
        names = list(names) if names else [f"x{i + 1}" for i in range(self.n)]
        parts = []
        for mono in sorted(self._terms, key=lambda m: (-sum(m), tuple(-e for e in m))):
            c = self._terms[mono]
            factors = [
                name if e == 1 else f"{name}^{e}"
                for name, e in zip(names, mono)
                if e > 0
            ]
            body = "*".join(factors)
            magnitude = abs(c)
            if body and magnitude == 1:
                text = body
            elif body:
                text = f"{magnitude}*{body}"
            else:
                text = str(magnitude)
            sign = "-" if c < 0 else "+"
            parts.append((sign, text))
        first_sign, first_text = parts[0]
        out = ("-" if first_sign == "-" else "") + first_text
        for sign, text in parts[1:]:
            out += f" {sign} {text}"
        return out

    def __str__(self) -> str:
        return self.format()

    def __repr__(self) -> str:
        return f"Polynomial({self.n}, {dict(self._terms)!r})"


def _guard(poly: Polynomial, max_terms: Optional[int]) -> None:
    if max_terms is not None and poly.num_terms > max_terms:
        raise PolynomialBlowupError(poly.num_terms, max_terms)


def guard_terms(poly: Polynomial, max_terms: Optional[int]) -> Polynomial:
    _guard(poly, max_terms)
    return poly
