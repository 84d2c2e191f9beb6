"""Commands that verify the engine: check against the oracles, bench the cost ratios."""

import argparse
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List

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
from app.exceptions import CommandError, OracleError, PieceEnumerationError
from app.models.report_models import BenchReport, BenchRow, CheckItem, CheckReport
from app.modules.asd.engine import asd_program, asd_program_flat, reverse_gradient
from app.modules.asd.sampling import direction_for_seed
from app.modules.corpus.scanner import CorpusEntry, load_corpus
from app.modules.oracle.exact import exact_piece_gradient
from app.modules.oracle.finite_difference import FDSchedule, fd_directional
from app.modules.oracle.limiting import clarke_hull_check
from app.modules.reporting.formatter import emit

logger = logging.getLogger(__name__)

BOUNDS = {"flat": 6.0, "nested": 10.0, "reverse": 5.0}
MAX_HULL_DIM = 4


def _close(a, b, rel: float = 1e-9) -> bool:
    return abs(float(a) - float(b)) <= rel * max(1.0, abs(float(b)))


def cmd_check(args: argparse.Namespace) -> None:
    settings = get_settings()
    prog, lib = load_program(args.file, not args.no_cq_check, settings)
    x = parse_point(args.at, prog.input_arity)
    v, seed = resolve_direction(args, prog.input_arity, settings)
    ktol = kink_tol(args, settings)
    hull_tol = args.tol if args.tol is not None else settings.hull_tol

    result = asd_program_flat(prog, x, v, lib, kink_tol=ktol)
    checks: List[CheckItem] = []

    try:
        expected = exact_piece_gradient(prog, x, v, lib, settings.max_branch_nodes, settings.max_poly_terms)
        replay = asd_program_flat(prog, x, v, lib, exact=True, kink_tol=ktol)
        exact_ok = tuple(replay.gradient) == tuple(expected)
        float_ok = all(_close(a, b) for a, b in zip(result.gradient, expected))
        checks.append(
            CheckItem(
                name="exact piece gradient",
                passed=exact_ok and float_ok,
                detail=f"expected [{', '.join(map(str, expected))}], rational replay "
                f"[{', '.join(map(str, replay.gradient))}]",
            )
        )
    except PieceEnumerationError as exc:
        checks.append(CheckItem(name="exact piece gradient", passed=True, skipped=True, detail=str(exc)))

    fd = fd_directional(prog, x, v, lib, FDSchedule(tuple(settings.fd_steps)), exact=True)
    d = float(result.derivative)
    gap = abs(d - fd.value)
    fd_ok = fd.converged and gap <= max(fd.error, 1e-6 * max(1.0, abs(fd.value)))
    checks.append(
        CheckItem(
            name="directional derivative",
            passed=fd_ok,
            detail=f"engine {d:.12g}, finite differences {fd.value:.12g} +/- {fd.error:.3g}",
        )
    )

    if prog.input_arity <= MAX_HULL_DIM:
        try:
            hull = clarke_hull_check(
                prog, x, floats(result.gradient), lib,
                n_dirs=args.dirs, tol=hull_tol, seed=seed or 0, v=v, dedup_tol=settings.dedup_tol,
            )
            checks.append(
                CheckItem(name="Clarke hull", passed=hull.member, skipped=hull.inconclusive, detail=hull.describe())
            )
        except OracleError as exc:
            checks.append(CheckItem(name="Clarke hull", passed=False, detail=str(exc)))
    else:
        checks.append(
            CheckItem(name="Clarke hull", passed=True, skipped=True, detail=f"dimension {prog.input_arity} > {MAX_HULL_DIM}")
        )

    passed = all(c.passed or c.skipped for c in checks)
    report = CheckReport(
        program=prog.name,
        point=floats(x),
        direction=floats(v),
        seed=seed,
        subgradient=floats(result.gradient),
        directional_derivative=d,
        checks=checks,
        passed=passed,
    )
    emit(report, args.json)
    if not passed:
        failed = [f"{c.name}: {c.detail}" for c in checks if not c.passed and not c.skipped]
        raise CommandError(4, f"oracle check failed for {prog.name}", witness="; ".join(failed))


def _bench_entry(entry: CorpusEntry, variants: List[str], seed: int) -> List[BenchRow]:
    rows = []
    prog = entry.program
    for point in entry.points:
        v = point.v if point.v is not None else direction_for_seed(prog.input_arity, seed)
        runs = []
        for variant in variants:
            runner = asd_program_flat if variant == "flat" else asd_program
            runs.append((variant, runner(prog, point.x, v, entry.registry).cost))
        if prog.is_straight_line:
            runs.append(("reverse", reverse_gradient(prog, point.x, entry.registry).cost))
        for variant, cost in runs:
            bound = BOUNDS[variant]
            rows.append(
                BenchRow(
                    program=entry.name,
                    point=floats(point.x),
                    variant=variant,
                    runtime_f=cost.runtime_f,
                    runtime_asd=cost.runtime_asd,
                    ratio=cost.ratio,
                    bound=bound,
                    ok=cost.ratio <= bound,
                )
            )
    return rows


def cmd_bench(args: argparse.Namespace) -> None:
    settings = get_settings()
    entries = load_corpus(args.corpus, cq_check=not args.no_cq_check)
    variants = ["flat", "nested"] if args.variant == "both" else [args.variant]
    seed = args.seed if args.seed is not None else settings.default_seed

    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        per_entry = list(pool.map(lambda e: _bench_entry(e, variants, seed), entries))
    rows = [row for chunk in per_entry for row in chunk]

    passed = all(r.ok for r in rows)
    report = BenchReport(corpus=args.corpus, rows=rows, passed=passed)
    emit(report, args.json)
    if not passed:
        worst = [f"{r.program} {r.variant} ratio {r.ratio:.3f} > {r.bound:g}" for r in rows if not r.ok]
        raise CommandError(5, "cost bound violated", witness="; ".join(worst))


def register(subparsers) -> None:
    common = common_options()

    check = subparsers.add_parser("check", parents=[common, query_options()], help="Compare the engine with the oracles")
    check.add_argument("--dirs", type=int, default=32, help="Random directions for the hull check")
    check.add_argument("--tol", type=float, default=None, help="Hull distance tolerance")
    check.set_defaults(handler=cmd_check)

    bench = subparsers.add_parser("bench", parents=[common], help="Cost ratios over a corpus directory")
    bench.add_argument("corpus", help="Directory of .prog files with sibling .points files")
    bench.add_argument("--variant", choices=["nested", "flat", "both"], default="both")
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--workers", type=int, default=1)
    bench.set_defaults(handler=cmd_bench)
