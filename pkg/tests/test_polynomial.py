from fractions import Fraction

import pytest

from app.exceptions import PieceEnumerationError, PolynomialBlowupError
from app.modules.graph.polynomial import Polynomial, guard_terms


def xy():
    return Polynomial.variable(2, 0), Polynomial.variable(2, 1)


class TestArithmetic:
    def test_zero_coefficients_are_dropped(self):
        x, y = xy()
        p = (x + y) - y
        assert p == x
        assert (x - x).is_zero()
        assert (x - x).num_terms == 0

    def test_product_and_power(self):
        x, y = xy()
        p = (x + y) ** 2
        assert p.terms == {(2, 0): 1, (1, 1): 2, (0, 2): 1}
        assert p.degree() == 2

    def test_scalar_lifting(self):
        x, _ = xy()
        p = 3 - x * Fraction(1, 2)
        assert p.evaluate([Fraction(2), Fraction(0)]) == Fraction(2)

    def test_variable_count_mismatch(self):
        x, _ = xy()
        with pytest.raises(ValueError):
            x + Polynomial.variable(1, 0)

    def test_invalid_exponents_rejected(self):
        with pytest.raises(ValueError):
            Polynomial(2, {(1,): 1})
        with pytest.raises(ValueError):
            Polynomial(1, {(-1,): 1})


class TestEvaluation:
    def test_exact_evaluation_stays_rational(self):
        p = Polynomial.univariate([Fraction(1, 3), 0, 1])
        value = p.evaluate([Fraction(1, 2)])
        assert isinstance(value, Fraction)
        assert value == Fraction(7, 12)

    def test_float_evaluation(self):
        p = Polynomial.univariate([1, 2])
        assert p.evaluate([0.25]) == pytest.approx(1.5)

    def test_constant_evaluates_to_fraction(self):
        assert Polynomial.constant(2, 0).evaluate([1, 2]) == 0
        assert isinstance(Polynomial.zero(1).evaluate([Fraction(5)]), Fraction)

    def test_partials_and_gradient(self):
        x, y = xy()
        p = x**3 * y + 4 * y
        dx, dy = p.gradient()
        assert dx == 3 * x**2 * y
        assert dy == x**3 + 4

    def test_along_line_coefficients(self):
        x, y = xy()
        p = x * y - 1
        # (1 + d)(2 - 3d) - 1 = 1 - d - 3d^2
        assert p.along_line([1, 2], [1, -3]) == [1, -1, -3]

    def test_along_line_of_zero_polynomial(self):
        assert Polynomial.zero(1).along_line([3], [1]) == [0]


class TestComposition:
    def test_substitution(self):
        u, w = Polynomial.variable(2, 0), Polynomial.variable(2, 1)
        x = Polynomial.variable(1, 0)
        p = u * w + u
        out = p.compose([x**2, x + 1])
        assert out == x**3 + x**2 + x**2

    def test_term_cap(self):
        x, y = xy()
        p = Polynomial.univariate([0, 0, 0, 0, 0, 0, 1])
        with pytest.raises(PolynomialBlowupError) as info:
            p.compose([x + y + 1], max_terms=10)
        assert isinstance(info.value, PieceEnumerationError)
        assert info.value.limit == 10

    def test_guard_terms_passes_small(self):
        x, _ = xy()
        assert guard_terms(x + 1, 5) == x + 1

    def test_univariate_coefficients(self):
        p = Polynomial.univariate([1, 0, -2])
        assert p.coefficients() == [1, 0, -2]
        with pytest.raises(ValueError):
            Polynomial.variable(2, 0).coefficients()


class TestFormatting:
    def test_format_orders_by_degree(self):
        x, y = xy()
        assert str(x**2 - 3 * y + Fraction(1, 2)) == "x1^2 - 3*x2 + 1/2"

    def test_zero(self):
        assert str(Polynomial.zero(3)) == "0"

    def test_leading_minus(self):
        x, _ = xy()
        assert str(-x) == "-x1"

    def test_hashable_by_value(self):
        x, y = xy()
        assert len({x + y, y + x}) == 1
