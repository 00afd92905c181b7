import logging
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Annotated

import typer
from rich.console import Console

from hjgraph.config import get_settings
from hjgraph.core.mesh import Lattice, nearest_site
from hjgraph.exceptions import HJGraphError
from hjgraph.schemas import RunConfig, parse_config
from hjgraph.utils.artifacts import prepare_output_dir, write_resolved_config
from hjgraph.utils.log_utils import configure_logging

logger = logging.getLogger(__name__)
console = Console()
settings = get_settings()

ConfigOption = Annotated[
    Path | None, typer.Option("--config", "-c", help="YAML or JSON run document.")
]
OutOption = Annotated[
    Path | None, typer.Option("--out", "-o", help="Directory for the artifacts.")
]
ThreadsOption = Annotated[
    int | None,
    typer.Option(
        "--threads",
        "-t",
        min=1,
        help="Worker threads for the per-level solves of converge; other commands ignore it.",
    ),
]
LogLevelOption = Annotated[
    str | None, typer.Option("--log-level", help="DEBUG, INFO, WARNING or ERROR.")
]


@contextmanager
def handle_errors() -> Iterator[None]:
    try:
        yield
    except HJGraphError as exc:
        console.print(f"[bold red]error[/bold red] {exc.detail}")
        raise typer.Exit(code=exc.exit_code) from exc


def load_run(
    config_path: Path | None, out: Path | None, log_level: str | None
) -> tuple[RunConfig, Path]:
    """Configure logging, parse the run document and echo it into the output dir."""
    configure_logging(log_level)
    config = parse_config(config_path)
    out_dir = prepare_output_dir(
        out or Path(config.run.output_dir or settings.OUTPUT_DIR)
    )
    write_resolved_config(out_dir, config)
    logger.info("artifacts go to %s", out_dir)
    return config, out_dir


def resolve_threads(config: RunConfig, threads: int | None) -> int:
    return threads or config.run.threads or settings.THREADS


def dirac_site(config: RunConfig, lattice: Lattice) -> int:
    """The configured site, or the interior site nearest the barycenter."""
    explicit = config.run.dirac_site is not None
    return nearest_site(lattice, config.dirac_target(), interior=not explicit)
