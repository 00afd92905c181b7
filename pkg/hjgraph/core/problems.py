"""Built-in initial data U0 and potentials F, evaluated on stacks of points."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

from hjgraph.core.graph import FloatArray
from hjgraph.core.mesh import Field, Lattice
from hjgraph.exceptions import DomainError


class InitialDatum(StrEnum):
    CONSTANT = "constant"
    LINEAR = "linear"
    QUADRATIC = "quadratic"
    COSINE = "cosine"


class Potential(StrEnum):
    ZERO = "zero"
    LINEAR = "linear"
    QUADRATIC = "quadratic"


def _cumulative(xis: FloatArray) -> FloatArray:
    return np.asarray(np.cumsum(xis, axis=1)[:, :-1], dtype=np.float64)


INITIAL_DATA: dict[InitialDatum, Callable[[FloatArray], FloatArray]] = {
    InitialDatum.CONSTANT: lambda xi: np.ones(xi.shape[0]),
    InitialDatum.LINEAR: lambda xi: xi[:, 0].copy(),
    InitialDatum.QUADRATIC: lambda xi: xi[:, 0] ** 2,
    InitialDatum.COSINE: lambda xi: np.sum(np.cos(np.pi * _cumulative(xi)), axis=1),
}


@dataclass(frozen=True)
class Problem:
    u0: InitialDatum = InitialDatum.QUADRATIC
    F: Potential = Potential.ZERO
    T: float = 0.5
    F_coefficients: Sequence[float] | None = field(default=None)

    def __post_init__(self) -> None:
        if not self.T > 0.0:
            raise DomainError(f"final time T must be positive, got {self.T}")

    def initial_values(self, xis: FloatArray) -> FloatArray:
        return np.asarray(INITIAL_DATA[self.u0](xis), dtype=np.float64)

    def potential_values(self, xis: FloatArray) -> FloatArray:
        match self.F:
            case Potential.ZERO:
                return np.zeros(xis.shape[0])
            case Potential.LINEAR:
                d = xis.shape[1]
                coefficients = (
                    np.arange(1, d + 1, dtype=np.float64) / d
                    if self.F_coefficients is None
                    else np.asarray(self.F_coefficients, dtype=np.float64)
                )
                if coefficients.shape != (d,):
                    raise DomainError(f"linear potential needs {d} coefficients")
                return np.asarray(xis @ coefficients, dtype=np.float64)
            case Potential.QUADRATIC:
                return np.asarray(np.sum(xis * xis, axis=1), dtype=np.float64)
        raise DomainError(f"unknown potential {self.F!r}")

    def initial_field(self, lattice: Lattice) -> Field:
        return Field(lattice, self.initial_values(lattice.xi))
