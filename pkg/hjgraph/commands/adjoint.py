import logging

import numpy as np
from rich.table import Table

from hjgraph.core.adjoint import (
    DiracTerminal,
    GeneralTerminal,
    Terminal,
    adjoint_backward_solve,
)
from hjgraph.core.mesh import Field
from hjgraph.core.scheme import SemiDiscreteScheme
from hjgraph.core.weights import weight_field
from hjgraph.schemas import build_solver_config
from hjgraph.utils.artifacts import write_snapshots, write_table
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

CONSERVATION_COLUMNS = ["t", "mass", "min_sigma", "max_wsigma"]


def adjoint(
    config_path: ConfigOption = None,
    out: OutOption = None,
    threads: ThreadsOption = None,
    log_level: LogLevelOption = None,
) -> None:
    """Solve forward, then the weighted adjoint backward from the terminal datum.

    Writes sigma.csv and rho.csv (t = 0, report times, T) and conservation.csv.
    """
    with handle_errors():
        config, out_dir = load_run(config_path, out, log_level)
        logger.debug("adjoint uses 1 of %d threads", resolve_threads(config, threads))
        solver = build_solver_config(config)
        scheme = SemiDiscreteScheme(solver)
        solution = scheme.solve(record_coefficients=True)
        assert solution.trajectory is not None
        lattice = scheme.lattice
        weight = weight_field(solver.weight, lattice)

        terminal: Terminal
        if config.run.terminal == "dirac":
            site = dirac_site(config, lattice)
            logger.info("Dirac terminal at site %d, xi=%s", site, lattice.xi[site].tolist())
            terminal = DiracTerminal(site)
        else:
            terminal = GeneralTerminal(Field(lattice, np.ones(lattice.n_sites)))
        result = adjoint_backward_solve(solution.trajectory, weight, terminal)

        stored = sorted({0.0, solver.T, *solver.report_times})
        states = [result.at(t) for t in stored]
        write_snapshots(out_dir / "sigma.csv", stored, [s.sigma for s in states])
        write_snapshots(out_dir / "rho.csv", stored, [s.rho for s in states])
        write_table(
            out_dir / "conservation.csv",
            CONSERVATION_COLUMNS,
            result.conservation.table(),
        )

        conservation = result.conservation
        table = Table(title=f"adjoint d={solver.graph.d} N={solver.N}")
        table.add_column("levels", justify="right")
        table.add_column("mass(0)", justify="right")
        table.add_column("mass drift", justify="right")
        table.add_column("min sigma", justify="right")
        table.add_column("max w*sigma", justify="right")
        table.add_row(
            str(len(result.states)),
            f"{conservation.mass[0]:.17g}",
            f"{conservation.mass_drift(conservation.mass[-1]):.3g}",
            f"{min(conservation.min_sigma):.3g}",
            f"{max(conservation.max_wsigma):.4g}",
        )
        console.print(table)
