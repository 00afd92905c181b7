import logging
from logging.config import fileConfig
from pathlib import Path

from rich.logging import RichHandler

from hjgraph.config import get_settings


def configure_logging(level: str | None = None, config_file: str | None = None) -> None:
    """Load the ini logging config, falling back to a bare RichHandler."""
    settings = get_settings()
    path = Path(config_file or settings.LOG_CONFIG)
    if path.is_file():
        fileConfig(path, disable_existing_loggers=False)
    else:
        logging.basicConfig(
            format="[%(name)s] %(message)s",
            datefmt="%H:%M:%S",
            handlers=[RichHandler(show_path=False)],
        )
    logging.getLogger("hjgraph").setLevel((level or settings.LOG_LEVEL).upper())
