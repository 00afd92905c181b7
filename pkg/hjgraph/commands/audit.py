import logging

from rich.table import Table

from hjgraph.core.audit import run_audit
from hjgraph.core.mesh import Lattice
from hjgraph.exceptions import InvariantViolation
from hjgraph.schemas import build_solver_config
from hjgraph.utils.artifacts import write_model
from hjgraph.utils.cli_utils import (
    ConfigOption,
    LogLevelOption,
    OutOption,
    ThreadsOption,
    console,
    dirac_site,
    handle_errors,
    load_run,
    resolve_threads,
)

logger = logging.getLogger(__name__)


def audit(
    config_path: ConfigOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Run the invariant suite; exits with code 3 on any violation."""
    with handle_errors():
        config, out_dir = load_run(config_path, out, log_level)
        logger.debug("audit uses 1 of %d threads", resolve_threads(config, threads))
        solver = build_solver_config(config)
        lattice = Lattice.build(solver.graph.d, solver.N, solver.site_budget)
        report = run_audit(
            solver,
            dirac_site(config, lattice),
            samples=config.run.audit_samples,
            seed=config.run.seed,
        )
        write_model(out_dir / "audit.json", report)

        table = Table(title=f"audit d={report.d} N={report.N} {report.scheme}")
        table.add_column("check")
        table.add_column("status")
        table.add_column("value", justify="right")
        table.add_column("tolerance", justify="right")
        assumptions = report.assumptions
        table.add_row(
            "assumptions",
            "ok" if assumptions.ok else "[red]FAILED[/red]",
            str(assumptions.violations),
            "0",
        )
        for check in report.checks:
            table.add_row(
                check.name,
                "ok" if check.ok else "[red]FAILED[/red]",
                f"{check.value:.3g}",
                f"{check.tolerance:.3g}",
            )
        console.print(table)

        if not report.ok:
            raise InvariantViolation(f"invariant violations: {', '.join(report.failures)}")
