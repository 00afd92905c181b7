from collections.abc import Sequence
from pathlib import Path

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel

from hjgraph.core.mesh import Field

RESOLVED_CONFIG = "resolved_config.json"
NUMBER_FORMAT = "%.17g"


def prepare_output_dir(out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_table(path: Path, columns: Sequence[str], rows: npt.ArrayLike) -> None:
    """CSV with a header line, 17 significant digits and '\\n' line endings."""
    table = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if table.size == 0:
        table = np.empty((0, len(columns)))
    if table.shape[1] != len(columns):
        raise ValueError(f"{path.name}: {table.shape[1]} columns for {len(columns)} names")
    np.savetxt(
        path,
        table,
        fmt=NUMBER_FORMAT,
        delimiter=",",
        header=",".join(columns),
        comments="",
        newline="\n",
    )


def write_model(path: Path, model: BaseModel) -> None:
    path.write_text(model.model_dump_json(indent=2, by_alias=True) + "\n", encoding="utf-8")


def write_resolved_config(out: Path, config: BaseModel) -> Path:
    path = out / RESOLVED_CONFIG
    write_model(path, config)
    return path


def write_snapshots(
    path: Path, times: Sequence[float], fields: Sequence[Field]
) -> None:
    """Long-format table: t, site_id, s_*, xi_*, value for every stored time."""
    if not fields:
        raise ValueError("no snapshots to write")
    lattice = fields[0].lattice
    columns = (
        ["t", "site_id"]
        + [f"s_{k + 1}" for k in range(lattice.d - 1)]
        + [f"xi_{k + 1}" for k in range(lattice.d)]
        + ["value"]
    )
    site_ids = np.arange(lattice.n_sites, dtype=np.float64)
    blocks = [
        np.column_stack(
            [np.full(lattice.n_sites, t), site_ids, lattice.s, lattice.xi, field.values]
        )
        for t, field in zip(times, fields)
    ]
    write_table(path, columns, np.vstack(blocks))
