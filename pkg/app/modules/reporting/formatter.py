from typing import Optional

from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from app.models.report_models import BenchReport, CheckReport, NaiveReport, PiecesReport, RunReport


def _vec(values) -> str:
    return "[" + ", ".join(f"{v:.12g}" for v in values) + "]"


def format_as_json(report: BaseModel) -> str:
    return report.model_dump_json(indent=2)


def format_run(report: RunReport) -> Table:
    table = Table(title=f"subgradient of {report.program}", show_header=False)
    table.add_column("field", style="bold")
    table.add_column("value")
    table.add_row("point", _vec(report.point))
    table.add_row("direction", _vec(report.direction) + (f" (seed {report.seed})" if report.seed is not None else ""))
    table.add_row("value", f"{report.value:.12g}")
    table.add_row("directional derivative", f"{report.directional_derivative:.12g}")
    table.add_row("subgradient", _vec(report.subgradient))
    table.add_row("variant", report.variant + (" (rational replay)" if report.exact else ""))
    table.add_row("cost", f"{report.cost.runtime_asd} / {report.cost.runtime_f} = {report.cost.ratio:.3f}")
    if report.traces:
        table.add_row("branch traces", " ".join(report.traces))
    if report.cross_check is not None:
        cc = report.cross_check
        verdict = "agree" if cc.agree else f"DISAGREE ({len(cc.distinct)} distinct, spread {cc.spread:.3g})"
        table.add_row("cross-check", f"{len(cc.seeds)} seeds: {verdict}")
    return table


def format_naive(report: NaiveReport) -> Table:
    table = Table(title=f"naive vs. subgradient for {report.program}")
    table.add_column("method")
    table.add_column("gradient")
    table.add_row(f"naive (relu'(0) = {report.relu_zero:g})", _vec(report.naive_gradient))
    table.add_row("subgradient", _vec(report.subgradient))
    table.caption = "agree" if report.agree else "differ"
    return table


def format_pieces(report: PiecesReport) -> Table:
    table = Table(title=f"pieces of {report.program}")
    table.add_column("#", justify="right")
    table.add_column("word")
    table.add_column("constraints")
    table.add_column("polynomial")
    table.add_column("selected")
    for i, piece in enumerate(report.pieces):
        constraints = "; ".join(f"{c.polynomial} {'>=' if c.sign > 0 else '<'} 0" for c in piece.constraints)
        mark = ""
        if piece.selected:
            mark = "yes" + (f", gradient [{', '.join(piece.gradient)}]" if piece.gradient else "")
        table.add_row(str(i), piece.word or "(none)", constraints or "(always)", piece.polynomial, mark)
    return table


def format_check(report: CheckReport) -> Table:
    table = Table(title=f"oracle checks for {report.program} at {_vec(report.point)}")
    table.add_column("check")
    table.add_column("result")
    table.add_column("detail")
    for item in report.checks:
        result = "skipped" if item.skipped else ("pass" if item.passed else "FAIL")
        table.add_row(item.name, result, item.detail)
    return table


def format_bench(report: BenchReport) -> Table:
    table = Table(title=f"cost ratios over {report.corpus}")
    table.add_column("program")
    table.add_column("point")
    table.add_column("variant")
    table.add_column("asd / f", justify="right")
    table.add_column("ratio", justify="right")
    table.add_column("bound", justify="right")
    table.add_column("ok")
    for row in report.rows:
        table.add_row(
            row.program,
            _vec(row.point),
            row.variant,
            f"{row.runtime_asd} / {row.runtime_f}",
            f"{row.ratio:.3f}",
            f"{row.bound:g}",
            "yes" if row.ok else "NO",
        )
    return table


_TABLES = {
    RunReport: format_run,
    NaiveReport: format_naive,
    PiecesReport: format_pieces,
    CheckReport: format_check,
    BenchReport: format_bench,
}


def emit(report: BaseModel, as_json: bool, console: Optional[Console] = None, warnings=()) -> None:
    """JSON goes to stdout untouched; tables go through rich."""
    if as_json:
        print(format_as_json(report))
        return
    console = console or Console()
    console.print(_TABLES[type(report)](report))
    for line in warnings:
        console.print(f"[yellow]warning:[/yellow] {line}")
