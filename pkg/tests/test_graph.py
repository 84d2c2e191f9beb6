from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from app.exceptions import DimensionMismatchError, DSLParseError, PieceEnumerationError, PieceSelectionError
from app.modules.graph.evaluator import evaluate, evaluate_branch
from app.modules.graph.graph_builder import build_program_graph, find_dead_nodes
from app.modules.graph.parser import LibraryDecl, PiecewiseDecl, parse_program
from app.modules.graph.pieces import extract_pieces, limiting_sign, piece_select, sign_of
from app.modules.graph.polynomial import Polynomial
from app.modules.graph.program import (
    Affine,
    Assignment,
    Branch,
    BranchProgram,
    BranchTrace,
    Compute,
    CostMeter,
    LibCall,
    Monomial,
    ProgramDef,
    Return,
)
from app.modules.graph.validator import validate, validate_branch_program
from app.modules.library.piecewise import make_piecewise_poly
from tests.factories import max_library

F3 = """
# f3 from the corpus
inputs 1
n2 = call relu n1
n3 = affine 0 -1 n1
n4 = call relu n3
n5 = affine 0 10 n1 -9 n2 9 n4
output n5
"""


class TestParser:
    def test_program(self):
        parsed = parse_program(F3, "f3")
        prog = parsed.program
        assert prog.name == "f3"
        assert prog.input_arity == 1
        assert prog.output == 5
        assert [a.target for a in prog.assignments] == [2, 3, 4, 5]
        assert prog.assignments[0].instruction == LibCall("relu", (1,))
        assert prog.assignments[3].instruction == Affine(0, ((10, 1), (-9, 2), (9, 4)))
        assert parsed.definitions == ()

    def test_monomial_and_rationals(self):
        prog = parse_program("inputs 2\nn3 = mono -3/2 n1^2 n2\noutput n3").program
        assert prog.assignments[0].instruction == Monomial(Fraction(-3, 2), ((1, 2), (2, 1)))

    def test_deflib_block(self):
        text = """
        deflib myrelu 1 unqualified
          branch n1 {
            return n1
          } else {
            n2 = affine 0
            return n2
          }
        """
        parsed = parse_program(text)
        assert parsed.program is None
        (decl,) = parsed.definitions
        assert isinstance(decl, LibraryDecl)
        assert decl.name == "myrelu" and decl.arity == 1 and not decl.claims_qualified
        assert decl.program.body == Branch(1, Return(1), Compute(2, Affine(0), Return(2)))

    def test_defpwl(self):
        parsed = parse_program("defpwl ramp breaks 0 1 pieces [0] [0 1] [1]")
        (decl,) = parsed.definitions
        assert isinstance(decl, PiecewiseDecl)
        assert decl.breakpoints == (0, 1)
        assert decl.pieces == ((0,), (0, 1), (1,))

    def test_error_position(self):
        with pytest.raises(DSLParseError) as info:
            parse_program("inputs 1\nn2 = affine 0 1 n1 x\noutput n2")
        assert info.value.line == 2
        assert info.value.column == 20
        assert "line 2, column 20" in str(info.value)

    @pytest.mark.parametrize(
        "text",
        [
            "inputs 1\nn2 = affine 0 1 n2\noutput n2",
            "inputs 1\ninputs 1\noutput n1",
            "n2 = affine 0\ninputs 1\noutput n2",
            "inputs 1\nn2 = frobnicate n1\noutput n2",
            "inputs 1\nn2 = mono 1 n1^0\noutput n2",
            "inputs 1\nn2 = affine 0 1 n1",
            "deflib f 1\n  branch n1 {\n    return n1\n  }",
            "defpwl f breaks 0 [0] [1]",
        ],
    )
    def test_rejects(self, text):
        with pytest.raises(DSLParseError):
            parse_program(text)


class TestValidator:
    def test_valid(self, registry):
        prog = parse_program(F3).program
        report = validate(prog, registry)
        assert report.ok
        assert report.warnings == ()

    def test_unknown_function_and_arity(self, registry):
        prog = ProgramDef(
            2,
            (Assignment(3, LibCall("nope", (1,))), Assignment(4, LibCall("max2", (1,)))),
            4,
        )
        report = validate(prog, registry)
        assert not report.ok
        assert any("unknown library function 'nope'" in v for v in report.violations)
        assert any("arity mismatch at node 4" in v for v in report.violations)

    def test_order_and_output(self, registry):
        prog = ProgramDef(1, (Assignment(3, Affine(0, ((1, 1),))), Assignment(2, Affine(0, ((1, 5),)))), 7)
        violations = validate(prog, registry).violations
        assert any("out of order" in v for v in violations)
        assert any("n5" in v for v in violations)
        assert any("undefined output n7" in v for v in violations)

    def test_dead_nodes_are_warnings(self, registry):
        prog = ProgramDef(1, (Assignment(2, Affine(1)), Assignment(3, Affine(0, ((2, 1),)))), 3)
        report = validate(prog, registry)
        assert report.ok
        assert report.warnings == ("nodes not feeding the output: n2",)

    def test_graph(self):
        prog = parse_program(F3).program
        graph = build_program_graph(prog)
        assert set(graph.predecessors(5)) == {1, 2, 4}
        assert find_dead_nodes(graph, 5) == set()

    def test_branch_program_rules(self):
        ok = BranchProgram(1, Compute(2, Monomial(1, ((1, 3),)), Branch(2, Return(1), Return(2))))
        assert validate_branch_program(ok).ok

        stale = BranchProgram(
            1, Compute(2, Affine(0, ((1, 1),)), Compute(3, Affine(1), Branch(2, Return(1), Return(3))))
        )
        assert any("most recent node is n3" in v for v in validate_branch_program(stale).violations)

        nested = BranchProgram(1, Compute(2, LibCall("relu", (1,)), Return(2)))
        assert any("inside a library body" in v for v in validate_branch_program(nested).violations)

        long_path = BranchProgram(1, Compute(2, Affine(0), Compute(3, Affine(0), Return(3))))
        assert long_path.step_bound == 2
        assert validate_branch_program(long_path, max_steps=2).ok
        report = validate_branch_program(long_path, max_steps=1)
        assert report.violations == ("longest path has 2 steps, exceeding the step bound 1",)

    def test_step_bound_counts_the_longest_path(self, registry):
        # relu: test then return, or test, zero node, return
        assert registry["relu"].program.step_bound == 2
        assert registry["max2"].program.step_bound == 2
        assert registry["relu_bad"].program.step_bound == 3


class TestEvaluator:
    def test_f3_values(self, registry):
        prog = parse_program(F3).program
        assert evaluate(prog, [2.0], registry).value == pytest.approx(2.0)
        assert evaluate(prog, [Fraction(-3)], registry, exact=True).value == -3

    def test_traces(self, registry):
        prog = parse_program(F3).program
        result = evaluate(prog, [Fraction(-1)], registry, exact=True)
        assert result.traces == (BranchTrace((-1,)), BranchTrace((1,)))

    def test_sign_of_zero_is_positive(self, registry):
        result = evaluate_branch(registry["abs"].program, [0.0])
        assert result.trace == BranchTrace((1,))
        assert result.value == 0

    def test_meter(self, registry):
        meter = CostMeter()
        prog = parse_program("inputs 2\nn3 = mono 2 n1^2 n2\nn4 = affine 1 1 n3 -1 n1\noutput n4").program
        evaluate(prog, [1.0, 2.0], registry, meter)
        assert (meter.multiplications, meter.additions, meter.branch_tests) == (5, 2, 0)

    def test_dimension_mismatch(self, registry):
        prog = parse_program(F3).program
        with pytest.raises(DimensionMismatchError):
            evaluate(prog, [1.0, 2.0], registry)

    def test_trace_padding(self):
        assert BranchTrace((1,)).padded(3) == (1, -1, -1)
        assert str(BranchTrace((1, -1))) == "+-"
        with pytest.raises(ValueError):
            BranchTrace((1, 1)).padded(1)


class TestPieces:
    def test_relu_pieces(self, registry):
        pieces = extract_pieces(registry["relu"].program)
        x = Polynomial.variable(1, 0)
        assert [p.word for p in pieces] == [(1,), (-1,)]
        assert pieces[0].constraints == ((x, 1),)
        assert pieces[0].piece == x
        assert pieces[1].piece.is_zero()

    def test_contains_and_gradient(self, registry):
        pieces = extract_pieces(registry["max2"].program)
        assert pieces[0].contains([1, 1])
        assert not pieces[1].contains([1, 1])
        assert pieces[1].gradient_at([0, 1]) == (0, 1)

    def test_limiting_sign_uses_higher_orders(self):
        x = Polynomial.variable(1, 0)
        assert limiting_sign(x**3, [0], [-1]) == -1
        assert limiting_sign(x**2, [0], [-1]) == 1
        assert limiting_sign(Polynomial.zero(1), [0], [1]) == 1
        assert limiting_sign(x - 1, [1], [Fraction(-1, 7)]) == -1

    def test_piece_select(self, registry):
        pieces = extract_pieces(registry["relu_bad"].program)
        assert piece_select(pieces, [0], [-1]).word == (-1,)
        assert piece_select(pieces, [0], [1]).word == (1,)

    def test_piece_select_detects_inconsistent_sets(self, registry):
        pieces = extract_pieces(registry["relu"].program)
        with pytest.raises(PieceSelectionError):
            piece_select(pieces[:1], [0], [-1])
        with pytest.raises(PieceSelectionError):
            piece_select(pieces + pieces, [0], [-1])

    def test_branch_bound(self, registry):
        with pytest.raises(PieceEnumerationError):
            extract_pieces(registry["max2"].program, max_branch_nodes=0)

    @pytest.mark.parametrize("name", ["relu", "abs", "max2", "min2", "relu_bad", "ladder", "max3"])
    def test_pieces_agree_with_evaluation_on_a_grid(self, registry, name):
        if name == "ladder":
            fn = make_piecewise_poly("ladder", [-1, 0, 1], [[1], [0, 0, 1], [0, 2], [1, 0, 1]])
        elif name == "max3":
            fn = max_library(3)
        else:
            fn = registry[name]
        step = Fraction(1, 4) if fn.arity < 3 else Fraction(1, 2)
        axis = [Fraction(-2) + i * step for i in range(int(4 / step) + 1)]
        pieces = extract_pieces(fn.program)
        for x in product(axis, repeat=fn.arity):
            result = evaluate_branch(fn.program, list(x), exact=True)
            matching = [p for p in pieces if p.contains(x)]
            assert len(matching) == 1
            assert matching[0].word == result.trace.word
            assert matching[0].piece.evaluate(list(x)) == result.value

    def test_limiting_sign_matches_small_steps(self):
        rng = np.random.default_rng(7)
        exponents = [(a, b) for a in range(4) for b in range(4) if a + b <= 3]
        grid = [Fraction(-1), Fraction(-1, 2), Fraction(0), Fraction(1, 2), Fraction(1)]
        for _ in range(200):
            chosen = rng.choice(len(exponents), size=int(rng.integers(1, 5)), replace=False)
            h = Polynomial(2, {exponents[i]: Fraction(int(rng.integers(-3, 4))) for i in chosen})
            x = [grid[int(i)] for i in rng.integers(0, len(grid), size=2)]
            v = [Fraction(0), Fraction(0)]
            while not any(v):
                v = [Fraction(int(t)) for t in rng.integers(-2, 3, size=2)]
            expected = limiting_sign(h, x, v)
            for delta in (Fraction(1, 10**8), Fraction(1, 10**9), Fraction(1, 10**10)):
                moved = [a + delta * b for a, b in zip(x, v)]
                assert sign_of(h.evaluate(moved)) == expected
