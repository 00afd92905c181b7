"""Admissible weights: positive on the open simplex, exactly zero on its boundary."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
import numpy.typing as npt

from hjgraph.core.graph import FloatArray, SimplexPoint
from hjgraph.core.mesh import Field, Lattice, lattice_sum
from hjgraph.exceptions import DomainError

logger = logging.getLogger(__name__)


class WeightKind(StrEnum):
    POLYNOMIAL = "polynomial"
    EXPONENTIAL = "exponential"
    MOLLIFIER = "mollifier"


@dataclass(frozen=True)
class WeightSpec:
    kind: WeightKind = WeightKind.POLYNOMIAL
    alpha: float = 1.0
    lam: float = 1.0

    def __post_init__(self) -> None:
        if self.kind is WeightKind.POLYNOMIAL and self.alpha < 1.0:
            raise DomainError(f"polynomial weight needs alpha >= 1, got {self.alpha}")
        if self.kind is WeightKind.EXPONENTIAL and self.lam <= 0.0:
            raise DomainError(f"exponential weight needs lambda > 0, got {self.lam}")


def weight_values(spec: WeightSpec, xis: npt.ArrayLike) -> FloatArray:
    """Evaluate w on a stack of points of shape (n, d)."""
    arr = np.atleast_2d(np.asarray(xis, dtype=np.float64))
    out = np.zeros(arr.shape[0], dtype=np.float64)
    interior = np.all(arr > 0.0, axis=1)
    inner = arr[interior]

    match spec.kind:
        case WeightKind.POLYNOMIAL:
            out[interior] = np.prod(inner, axis=1) ** spec.alpha
        case WeightKind.EXPONENTIAL:
            out[interior] = np.exp(-spec.lam / np.prod(inner, axis=1))
        case WeightKind.MOLLIFIER:
            out[interior] = np.exp(-np.sum(1.0 / inner, axis=1))
    return out


def weight_eval(spec: WeightSpec, xi: SimplexPoint | npt.ArrayLike) -> float:
    point = xi if isinstance(xi, SimplexPoint) else SimplexPoint(np.asarray(xi))
    return float(weight_values(spec, point.xi)[0])


def weight_field(spec: WeightSpec, lattice: Lattice) -> Field:
    values = weight_values(spec, lattice.xi)
    underflow = ~lattice.on_boundary & (values == 0.0)
    if np.any(underflow):
        # deep-corner interior sites, only reachable with steep exponential weights
        logger.warning(
            "%s weight underflows to 0 at %d interior sites (d=%d, N=%d)",
            spec.kind,
            int(underflow.sum()),
            lattice.d,
            lattice.N,
        )
    return Field(lattice, values)


def total_mass(weight: Field) -> float:
    """sum w * h^(d-1), the normalizer for weighted errors."""
    return lattice_sum(weight.values) * weight.lattice.cell_volume
