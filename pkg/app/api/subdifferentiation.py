"""Commands that query the engine: run, naive, pieces."""

import argparse
import logging
from fractions import Fraction

from app.api.dependencies import (
    common_options,
    floats,
    kink_tol,
    load_program,
    parse_point,
    query_options,
    resolve_direction,
)
from app.config import get_settings
from app.exceptions import CommandError
from app.models.report_models import (
    ConstraintModel,
    CostReportModel,
    CrossCheckModel,
    NaiveReport,
    PieceModel,
    PiecesReport,
    RunReport,
)
from app.modules.asd.engine import CostReport, asd_program, asd_program_flat
from app.modules.asd.sampling import cross_check, seeds_from
from app.modules.library.qualification import cq_diagnostic
from app.modules.oracle.exact import compose_program_pieces, select_program_piece
from app.modules.oracle.naive import NaiveConvention, naive_ad
from app.modules.reporting.formatter import emit

logger = logging.getLogger(__name__)


def cost_model(cost: CostReport) -> CostReportModel:
    return CostReportModel(
        runtime_f=cost.runtime_f,
        runtime_asd=cost.runtime_asd,
        ratio=cost.ratio,
        multiplications=cost.multiplications,
        additions=cost.additions,
        branch_tests=cost.branch_tests,
    )


def cmd_run(args: argparse.Namespace) -> None:
    settings = get_settings()
    prog, lib = load_program(args.file, not args.no_cq_check, settings)
    x = parse_point(args.at, prog.input_arity)
    v, seed = resolve_direction(args, prog.input_arity, settings)
    runner = asd_program_flat if args.variant == "flat" else asd_program
    result = runner(prog, x, v, lib, exact=args.exact, kink_tol=kink_tol(args, settings))

    cross = None
    if args.cross_check:
        cc = cross_check(prog, x, seeds_from(seed, args.cross_check), lib, variant=args.variant)
        cross = CrossCheckModel(
            seeds=[r.seed for r in cc.runs],
            distinct=[list(g) for g in cc.distinct],
            agree=cc.agree,
            spread=cc.spread,
        )

    report = RunReport(
        program=prog.name,
        point=floats(x),
        seed=seed,
        direction=floats(v),
        value=float(result.value),
        directional_derivative=float(result.derivative),
        subgradient=floats(result.gradient),
        cost=cost_model(result.cost),
        variant=args.variant,
        exact=args.exact,
        traces=[str(t) for t in result.traces],
        cross_check=cross,
    )
    emit(report, args.json)


def cmd_naive(args: argparse.Namespace) -> None:
    settings = get_settings()
    prog, lib = load_program(args.file, not args.no_cq_check, settings)
    x = parse_point(args.at, prog.input_arity)
    v, seed = resolve_direction(args, prog.input_arity, settings)
    try:
        relu_zero = Fraction(args.relu_zero)
    except (ValueError, ZeroDivisionError):
        raise CommandError(2, f"malformed --relu-zero value '{args.relu_zero}'")

    naive = naive_ad(prog, x, lib, NaiveConvention.with_relu_zero(relu_zero))
    correct = asd_program_flat(prog, x, v, lib, kink_tol=kink_tol(args, settings))
    agree = all(abs(float(a) - float(b)) <= 1e-12 for a, b in zip(naive.gradient, correct.gradient))
    report = NaiveReport(
        program=prog.name,
        point=floats(x),
        relu_zero=float(relu_zero),
        naive_gradient=floats(naive.gradient),
        subgradient=floats(correct.gradient),
        direction=floats(v),
        seed=seed,
        agree=agree,
    )
    emit(report, args.json)


def cmd_pieces(args: argparse.Namespace) -> None:
    settings = get_settings()
    prog, lib = load_program(args.file, not args.no_cq_check, settings)
    pieces = compose_program_pieces(prog, lib, settings.max_branch_nodes, settings.max_poly_terms)

    selected_index = None
    gradient = None
    warnings = []
    x = v = None
    if args.at is not None:
        x = parse_point(args.at, prog.input_arity)
        v, _ = resolve_direction(args, prog.input_arity, settings)
        chosen = select_program_piece(prog, x, v, lib, settings.max_branch_nodes, settings.max_poly_terms)
        selected_index = pieces.index(chosen)
        gradient = [str(g) for g in chosen.gradient_at(x)]

        replay = asd_program_flat(prog, x, v, lib, exact=True)
        for call in replay.calls:
            fn = lib[call.name]
            if not fn.claims_qualified:
                warnings.append(f"'{fn.name}' at n{call.node} is not claimed to satisfy the constraint qualification")
            outcome = cq_diagnostic(fn, [a.a for a in call.args], [a.d for a in call.args], settings.max_branch_nodes)
            if not outcome.passed and not outcome.inconclusive:
                warnings.append(f"constraint qualification violated by '{fn.name}' at n{call.node}: {outcome.describe()}")
        for line in warnings:
            logger.warning(line)

    report = PiecesReport(
        program=prog.name,
        pieces=[
            PieceModel(
                word="".join("+" if z > 0 else "-" for z in p.word),
                constraints=[ConstraintModel(polynomial=str(h), sign=s) for h, s in p.constraints],
                polynomial=str(p.piece),
                selected=i == selected_index,
                gradient=gradient if i == selected_index else None,
            )
            for i, p in enumerate(pieces)
        ],
        point=floats(x) if x is not None else None,
        direction=floats(v) if v is not None else None,
        selected=selected_index,
        cq_warnings=warnings,
    )
    emit(report, args.json, warnings=warnings)


def register(subparsers) -> None:
    common = common_options()
    query = query_options()

    run = subparsers.add_parser("run", parents=[common, query], help="Subgradient, value and directional derivative")
    run.add_argument("--variant", choices=["nested", "flat"], default="flat")
    run.add_argument("--exact", action="store_true", help="Replay in rational arithmetic")
    run.add_argument("--cross-check", type=int, default=0, metavar="K", help="Rerun with K seeds and compare")
    run.set_defaults(handler=cmd_run)

    naive = subparsers.add_parser("naive", parents=[common, query], help="Fixed-convention gradient side by side")
    naive.add_argument("--relu-zero", default="0", help="relu'(0) used by the naive convention")
    naive.set_defaults(handler=cmd_naive)

    pieces = subparsers.add_parser("pieces", parents=[common], help="List symbolic pieces")
    pieces.add_argument("file", help="Program file")
    pieces.add_argument("--at", default=None, help="Point at which to select a piece")
    group = pieces.add_mutually_exclusive_group()
    group.add_argument("--seed", type=int, default=None)
    group.add_argument("--dir", default=None)
    pieces.set_defaults(handler=cmd_pieces)
