import logging
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np
import pytest

from app.exceptions import LibraryDefinitionError, PiecewiseDefinitionError
from app.modules.graph.evaluator import evaluate_branch
from app.modules.graph.polynomial import Polynomial
from app.modules.graph.program import Affine, Branch, BranchProgram, Compute, Return
from app.modules.library.loader import load_source
from app.modules.library.piecewise import make_piecewise_poly
from app.modules.library.qualification import (
    constraint_points,
    cq_diagnostic,
    first_order_sign,
    rational_roots,
    sampled_cq_check,
)
from app.modules.library.registry import LibraryFunction, LibraryRegistry
from app.modules.oracle.lipschitz import lipschitz_probe

CUBE_TEST = """
deflib cube_relu 1
  n2 = mono 1 n1^3
  branch n2 {
    return n1
  } else {
    n3 = affine 0
    return n3
  }
inputs 1
n2 = call cube_relu n1
output n2
"""

SHIFTED_CUBE = """
deflib shifted_cube 1
  n2 = affine -1 3 n1
  n3 = mono 1 n2^3
  branch n3 {
    n4 = affine -1/3 1 n1
    return n4
  } else {
    n5 = affine 0
    return n5
  }
"""


class TestRegistry:
    def test_builtins(self, registry):
        assert sorted(registry) == ["abs", "max2", "min2", "relu", "relu_bad"]
        assert len(registry) == 5
        assert registry["max2"].arity == 2
        assert not registry["relu_bad"].claims_qualified
        assert all(registry[name].claims_qualified for name in ("relu", "abs", "max2", "min2"))

    def test_builtin_values(self, registry):
        assert evaluate_branch(registry["relu"].program, [-2.0]).value == 0
        assert evaluate_branch(registry["abs"].program, [-2.0]).value == 2.0
        assert evaluate_branch(registry["max2"].program, [1.0, 3.0]).value == 3.0
        assert evaluate_branch(registry["min2"].program, [1.0, 3.0]).value == 1.0
        assert evaluate_branch(registry["relu_bad"].program, [-0.5]).value == 0

    def test_duplicate_names(self, registry):
        with pytest.raises(LibraryDefinitionError):
            LibraryRegistry([registry["relu"], registry["relu"]])

    def test_with_functions_returns_new_registry(self, registry):
        ramp = make_piecewise_poly("ramp", [0, 1], [[0], [0, 1], [1]])
        extended = registry.with_functions([ramp])
        assert "ramp" in extended
        assert "ramp" not in registry

    def test_arity_must_match_program(self):
        with pytest.raises(LibraryDefinitionError):
            LibraryFunction("bad", 2, BranchProgram(1, Return(1)))

    def test_invalid_body_rejected(self):
        body = Compute(2, Affine(0, ((1, 1),)), Compute(3, Affine(1), Branch(2, Return(1), Return(3))))
        with pytest.raises(LibraryDefinitionError) as info:
            LibraryFunction("stale", 1, BranchProgram(1, body))
        assert info.value.name == "stale"

    def test_pieces_are_cached(self, registry):
        fn = registry["abs"]
        assert fn.pieces() is fn.pieces()
        assert len(fn.pieces()) == 2

    def test_pieces_cache_is_shared_across_threads(self, registry):
        fn = LibraryFunction("max2_copy", 2, registry["max2"].program)
        with ThreadPoolExecutor(max_workers=8) as pool:
            results = list(pool.map(lambda _: fn.pieces(), range(32)))
        assert all(r is results[0] for r in results)
        assert len(results[0]) == 2


class TestPiecewise:
    def test_ramp_values(self):
        ramp = make_piecewise_poly("ramp", [0, 1], [[0], [0, 1], [1]])
        values = {x: evaluate_branch(ramp.program, [Fraction(x)], exact=True).value for x in (-1, 0, Fraction(1, 2), 1, 3)}
        assert values == {-1: 0, 0: 0, Fraction(1, 2): Fraction(1, 2), 1: 1, 3: 1}

    def test_breakpoint_belongs_to_left_piece(self):
        step_up = make_piecewise_poly("hinge", [1], [[0, 0], [-1, 1]])
        assert evaluate_branch(step_up.program, [Fraction(1)], exact=True).trace.word == (1,)
        assert evaluate_branch(step_up.program, [Fraction(2)], exact=True).trace.word == (-1,)

    def test_quadratic_pieces(self):
        huber = make_piecewise_poly(
            "huber",
            [-1, 1],
            [Polynomial.univariate([Fraction(-1, 2), -1]), [0, 0, Fraction(1, 2)], [Fraction(-1, 2), 1]],
        )
        assert evaluate_branch(huber.program, [Fraction(1, 2)], exact=True).value == Fraction(1, 8)
        assert evaluate_branch(huber.program, [Fraction(-3)], exact=True).value == Fraction(5, 2)
        assert huber.program.branch_count == 2

    def test_matches_interval_lookup_on_a_grid(self):
        breaks = [-1, 0, 2]
        pieces = [[1], [0, 0, 1], [0, 3], [2, 2]]
        fn = make_piecewise_poly("ladder", breaks, pieces)
        for i in range(10_000):
            t = Fraction(i - 5000, 1000)
            k = sum(1 for b in breaks if t > b)
            expected = sum(Fraction(c) * t**p for p, c in enumerate(pieces[k]))
            assert evaluate_branch(fn.program, [t], exact=True).value == expected

    def test_float_value(self):
        leaky = make_piecewise_poly("leaky", [0], [[0, Fraction(1, 10)], [0, 1]])
        assert evaluate_branch(leaky.program, [-2.0]).value == pytest.approx(-0.2)

    @pytest.mark.parametrize(
        "breaks, pieces, message",
        [
            ([0], [[0]], "need 2 pieces"),
            ([1, 0], [[0], [0], [0]], "strictly increasing"),
            ([0], [[0], [1]], "discontinuity at breakpoint 0"),
        ],
    )
    def test_definition_errors(self, breaks, pieces, message):
        with pytest.raises(PiecewiseDefinitionError) as info:
            make_piecewise_poly("bad", breaks, pieces)
        assert any(message in v for v in info.value.violations)


class TestLoader:
    def test_builtins_plus_definitions(self):
        prog, lib = load_source("defpwl ramp breaks 0 1 pieces [0] [0 1] [1]\ninputs 1\nn2 = call ramp n1\noutput n2")
        assert prog.lib_calls[0].name == "ramp"
        assert "ramp" in lib and "relu" in lib

    def test_shadowing_a_builtin_is_rejected(self):
        with pytest.raises(LibraryDefinitionError):
            load_source("defpwl relu breaks 0 pieces [0] [0 1]")

    def test_registration_check_downgrades_claim(self, caplog):
        with caplog.at_level(logging.WARNING):
            _, lib = load_source(CUBE_TEST, "cube", cq_check=True)
        fn = lib["cube_relu"]
        assert not fn.claims_qualified
        assert "registration check failed" in fn.description
        assert any("constraint qualification" in r.getMessage() for r in caplog.records)

    def test_registration_check_can_be_skipped(self):
        _, lib = load_source(CUBE_TEST, "cube", cq_check=False)
        assert lib["cube_relu"].claims_qualified


class TestQualification:
    def test_relu_bad_witness(self, registry):
        result = cq_diagnostic(registry["relu_bad"], [0], [-1])
        assert not result.passed and not result.inconclusive
        x = Polynomial.variable(1, 0)
        assert result.witness.constraint == x**3
        assert (result.witness.limiting, result.witness.first_order) == (-1, 1)
        assert "limiting sign -1" in result.describe()

    def test_relu_bad_passes_away_from_zero(self, registry):
        assert cq_diagnostic(registry["relu_bad"], [1], [-1]).passed
        assert cq_diagnostic(registry["relu_bad"], [0], [1]).passed

    @pytest.mark.parametrize("name", ["relu", "abs", "max2", "min2"])
    def test_builtins_pass_on_kinks(self, registry, name):
        fn = registry[name]
        x = [Fraction(0)] * fn.arity
        for v in ([1] * fn.arity, [-1] * fn.arity, [Fraction(1, 3)] + [-1] * (fn.arity - 1)):
            assert cq_diagnostic(fn, x, v).passed

    def test_first_order_sign(self):
        x = Polynomial.variable(1, 0)
        assert first_order_sign(x - 1, [Fraction(2)], [Fraction(-1)]) == 1
        assert first_order_sign(-x, [Fraction(0)], [Fraction(1)]) == -1
        assert first_order_sign(x**2, [Fraction(0)], [Fraction(-1)]) == 1

    def test_constraint_points_lie_on_zero_sets(self, registry):
        rng = np.random.default_rng(3)
        fn = registry["max2"]
        points = constraint_points(fn, rng, count=5)
        assert len(points) == 5
        h = fn.pieces()[0].constraints[0][0]
        assert all(h.evaluate(list(p)) == 0 for p in points)
        assert constraint_points(registry["relu"], rng) == [(Fraction(0),)]

    def test_sampled_check(self, registry):
        assert sampled_cq_check(registry["abs"], samples=16).passed
        failed = sampled_cq_check(registry["relu_bad"], samples=16)
        assert not failed.passed
        assert failed.witness.x == (0,)

    def test_rational_roots(self):
        assert rational_roots([-1, 9, -27, 27]) == [Fraction(1, 3)]
        assert rational_roots([0, 0, 1]) == [0]
        assert rational_roots([-2, 0, 1]) == []
        assert set(rational_roots([Fraction(1, 2), Fraction(-3, 2), 1])) == {1, Fraction(1, 2)}

    def test_constraint_points_include_non_dyadic_roots(self):
        _, lib = load_source(SHIFTED_CUBE, "shifted", cq_check=False)
        fn = lib["shifted_cube"]
        assert fn.claims_qualified
        assert (Fraction(1, 3),) in constraint_points(fn, np.random.default_rng(0))

    def test_sampled_check_finds_non_dyadic_kink(self):
        _, lib = load_source(SHIFTED_CUBE, "shifted", cq_check=False)
        failed = sampled_cq_check(lib["shifted_cube"], samples=16)
        assert not failed.passed
        assert failed.witness.x == (Fraction(1, 3),)
        assert failed.witness.v == (-1,)

        _, checked = load_source(SHIFTED_CUBE, "shifted")
        assert not checked["shifted_cube"].claims_qualified

    def test_inconclusive_on_enumeration_bound(self, registry):
        result = cq_diagnostic(registry["max2"], [0, 0], [1, 1], max_branch_nodes=0)
        assert result.inconclusive
        assert result.describe().startswith("inconclusive")


class TestLipschitz:
    def test_abs(self, registry):
        estimate = lipschitz_probe(registry["abs"], samples=200)
        assert 0.999 <= estimate.constant <= 1 + 1e-6
        assert not estimate.violated
        assert estimate.pairs > 0

    def test_quadratic_piece_on_wider_box(self):
        sqramp = make_piecewise_poly("sqramp", [0], [[0], [0, 0, 1]])
        estimate = lipschitz_probe(sqramp, region=(-2, 2), samples=200)
        assert 3.0 < estimate.constant <= 4.0 + 1e-5

    def test_cap_reports_witness(self, registry):
        estimate = lipschitz_probe(registry["relu"], samples=50, cap=0.5)
        assert estimate.violated
        x, y = estimate.witness
        assert len(x) == len(y) == 1

    def test_region_must_be_a_box(self, registry):
        with pytest.raises(ValueError):
            lipschitz_probe(registry["relu"], region=(1, -1))
