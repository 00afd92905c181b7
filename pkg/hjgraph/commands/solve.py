import logging

from rich.table import Table

from hjgraph.core.mesh import write_field_csv
from hjgraph.core.scheme import SemiDiscreteScheme
from hjgraph.schemas import build_solver_config
from hjgraph.utils.artifacts import write_table
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

DIAGNOSTIC_COLUMNS = ["t", "m1", "m2", "linf", "dt"]


def solve(
    config_path: ConfigOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Integrate the scheme to T; writes field.csv and diagnostics.csv."""
    with handle_errors():
        config, out_dir = load_run(config_path, out, log_level)
        # a single trajectory is vectorized, threads only matter for studies
        logger.debug("solve uses 1 of %d threads", resolve_threads(config, threads))
        solver = build_solver_config(config)
        scheme = SemiDiscreteScheme(solver)
        solution = scheme.solve()

        write_field_csv(out_dir / "field.csv", solution.final)
        write_table(
            out_dir / "diagnostics.csv", DIAGNOSTIC_COLUMNS, solution.timeline.table()
        )
        for k, (t, snapshot) in enumerate(sorted(solution.snapshots.items())):
            if t < solver.T:
                write_field_csv(out_dir / f"field_t{k}.csv", snapshot)

        timeline = solution.timeline
        table = Table(title=f"solve d={solver.graph.d} N={solver.N}")
        table.add_column("steps", justify="right")
        table.add_column("R0", justify="right")
        table.add_column("max m1", justify="right")
        table.add_column("max m2", justify="right")
        table.add_column("|u(T)|inf", justify="right")
        table.add_row(
            str(len(timeline) - 1),
            f"{solver.hamiltonian.r0:.4g}",
            f"{max(timeline.m1):.4g}",
            f"{max(timeline.m2):.4g}",
            f"{timeline.linf[-1]:.4g}",
        )
        console.print(table)
