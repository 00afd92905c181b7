import logging

from rich.table import Table

from hjgraph.core.convergence import check_nested, refinement_study
from hjgraph.schemas import build_solver_config
from hjgraph.utils.artifacts import write_model, write_table
from hjgraph.utils.cli_utils import (
    ConfigOption,
    LogLevelOption,
    OutOption,
    ThreadsOption,
    console,
    handle_errors,
    load_run,
    resolve_threads,
)

logger = logging.getLogger(__name__)

RATE_COLUMNS = [
    "N",
    "h",
    "l1w_error",
    "linf_error",
    "max_m1",
    "max_m2",
    "remainder_l1",
]


def converge(
    config_path: ConfigOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Refinement study over run.N_list against the finest grid; writes rates.csv/json."""
    with handle_errors():
        config, out_dir = load_run(config_path, out, log_level)
        levels = check_nested(config.run.N_list)
        # R0 is calibrated once, on the coarsest level
        base = build_solver_config(config, N=levels[0])
        report = refinement_study(base, levels, resolve_threads(config, threads))

        write_table(out_dir / "rates.csv", RATE_COLUMNS, report.rows())
        write_model(out_dir / "rates.json", report)

        table = Table(title=f"convergence d={base.graph.d} {report.scheme}/{report.metric}")
        for column in RATE_COLUMNS:
            table.add_column(column, justify="right")
        for row in report.rows():
            table.add_row(str(int(row[0])), *(f"{v:.4g}" for v in row[1:]))
        console.print(table)
        if report.spacing_fit is not None and report.error_fit is not None:
            console.print(
                f"slope [bold]{report.spacing_fit.slope:.4f}[/bold] against h - h_ref "
                f"(R^2 {report.spacing_fit.r_squared:.4f}), "
                f"{report.error_fit.slope:.4f} against h"
            )
