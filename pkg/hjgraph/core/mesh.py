"""Simplex lattice in cumulative coordinates.

A site is stored by its integer cumulative coordinates ``k`` with
``0 <= k_1 <= ... <= k_{d-1} <= N``; the real coordinates are ``s = k / N``
and ``xi_l = (k_l - k_{l-1}) / N`` with ``k_0 = 0`` and ``k_d = N``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from itertools import combinations, combinations_with_replacement
from pathlib import Path

import numpy as np
import numpy.typing as npt

from hjgraph.core.graph import FloatArray, Graph, SimplexPoint
from hjgraph.exceptions import DomainError, LatticeMismatchError, SiteBudgetError

logger = logging.getLogger(__name__)

IndexArray = npt.NDArray[np.intp]

NO_SITE = -1


class Region(IntEnum):
    BOUNDARY_LAYER = 0
    INTERIOR_H = 1
    INTERIOR_2H = 2
    INTERIOR_3H = 3


def pi_forward(xi: SimplexPoint | npt.ArrayLike) -> FloatArray:
    point = xi.xi if isinstance(xi, SimplexPoint) else np.asarray(xi, dtype=np.float64)
    return np.asarray(np.cumsum(point)[:-1], dtype=np.float64)


def pi_inverse(s: npt.ArrayLike) -> FloatArray:
    coords = np.asarray(s, dtype=np.float64)
    padded = np.concatenate(([0.0], coords, [1.0]))
    return np.asarray(np.diff(padded), dtype=np.float64)


def stencil(d: int, edge: tuple[int, int]) -> IndexArray:
    """The multi-index m_{i,j}: ones on cumulative coordinates i..j-1."""
    i, j = edge
    m = np.zeros(d - 1, dtype=np.intp)
    m[i:j] = 1
    return m


@dataclass(frozen=True, eq=False)
class Lattice:
    d: int
    N: int
    coords: IndexArray = field(repr=False)
    _dense: IndexArray = field(repr=False)

    @classmethod
    def build(cls, d: int, N: int, site_budget: int | None = None) -> Lattice:
        if d < 2:
            raise DomainError(f"lattice needs d >= 2, got {d}")
        if N < 2:
            raise DomainError(f"lattice needs N >= 2, got {N}")
        count = math.comb(N + d - 1, d - 1)
        if site_budget is not None and count > site_budget:
            raise SiteBudgetError(
                f"lattice d={d}, N={N} has {count} sites, budget is {site_budget}"
            )
        coords = np.array(
            list(combinations_with_replacement(range(N + 1), d - 1)), dtype=np.intp
        ).reshape(count, d - 1)
        dense = np.full((N + 1,) * (d - 1), NO_SITE, dtype=np.intp)
        dense[tuple(coords.T)] = np.arange(count, dtype=np.intp)
        coords.setflags(write=False)
        dense.setflags(write=False)
        logger.debug("built lattice d=%d N=%d with %d sites", d, N, count)
        return cls(d=d, N=N, coords=coords, _dense=dense)

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def n_sites(self) -> int:
        return int(self.coords.shape[0])

    @property
    def cell_volume(self) -> float:
        return self.h ** (self.d - 1)

    @cached_property
    def s(self) -> FloatArray:
        return np.asarray(self.coords / self.N, dtype=np.float64)

    @cached_property
    def xi(self) -> FloatArray:
        n = self.n_sites
        padded = np.hstack(
            [np.zeros((n, 1), dtype=np.intp), self.coords, np.full((n, 1), self.N, dtype=np.intp)]
        )
        return np.asarray(np.diff(padded, axis=1) / self.N, dtype=np.float64)

    @cached_property
    def on_boundary(self) -> npt.NDArray[np.bool_]:
        return np.asarray(np.any(self.xi == 0.0, axis=1))

    @cached_property
    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(combinations(range(self.d), 2))

    def site_index(self, k: tuple[int, ...]) -> int | None:
        key = np.asarray(k, dtype=np.intp)
        if key.shape != (self.d - 1,) or np.any(key < 0) or np.any(key > self.N):
            return None
        idx = int(self._dense[tuple(key)])
        return None if idx == NO_SITE else idx

    def lookup(self, coords: IndexArray) -> IndexArray:
        """Site indices for rows of integer cumulative coordinates, NO_SITE if absent."""
        keys = np.asarray(coords, dtype=np.intp).reshape(-1, self.d - 1)
        inside = np.all((keys >= 0) & (keys <= self.N), axis=1)
        out = np.full(keys.shape[0], NO_SITE, dtype=np.intp)
        out[inside] = self._dense[tuple(keys[inside].T)]
        return out

    def locate(self, xi: SimplexPoint | npt.ArrayLike) -> int:
        """Index of the site at xi; xi must be a lattice point."""
        s = pi_forward(xi)
        k = np.rint(s * self.N).astype(np.intp)
        if not np.allclose(k / self.N, s, rtol=0.0, atol=1e-12):
            raise DomainError(f"{np.asarray(xi).tolist()} is not a lattice point at N={self.N}")
        idx = self.site_index(tuple(int(v) for v in k))
        if idx is None:
            raise DomainError(f"{np.asarray(xi).tolist()} is outside the simplex")
        return idx

    def _shift_all(self, edge: tuple[int, int], sign: int) -> IndexArray:
        shifted = self.coords + sign * stencil(self.d, edge)
        inside = np.all((shifted >= 0) & (shifted <= self.N), axis=1)
        if self.d > 2:
            inside &= np.all(np.diff(shifted, axis=1) >= 0, axis=1)
        out = np.full(self.n_sites, NO_SITE, dtype=np.intp)
        out[inside] = self._dense[tuple(shifted[inside].T)]
        return out

    @cached_property
    def _neighbors(self) -> dict[tuple[tuple[int, int], int], IndexArray]:
        table: dict[tuple[tuple[int, int], int], IndexArray] = {}
        for pair in self.pairs:
            for sign in (1, -1):
                nb = self._shift_all(pair, sign)
                nb.setflags(write=False)
                table[(pair, sign)] = nb
        return table

    def neighbors(self, edge: tuple[int, int], sign: int) -> IndexArray:
        """Site index at s + sign*h*m for every site, NO_SITE when it leaves."""
        i, j = edge
        if not 0 <= i < j < self.d:
            raise DomainError(f"edge {edge} must satisfy 0 <= i < j < {self.d}")
        if sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        return self._neighbors[((i, j), sign)]

    def neighbor_tables(self, graph: Graph) -> tuple[IndexArray, IndexArray]:
        """(forward, backward) tables of shape (n_sites, n_edges) for graph edges."""
        if graph.d != self.d:
            raise LatticeMismatchError(f"graph has d={graph.d}, lattice has d={self.d}")
        fwd = np.stack([self.neighbors(e, 1) for e in graph.edges], axis=1)
        bwd = np.stack([self.neighbors(e, -1) for e in graph.edges], axis=1)
        return fwd, bwd

    def region_levels(self, graph: Graph) -> npt.NDArray[np.int_]:
        """Deepest Region per (site, graph edge)."""
        fwd, bwd = self.neighbor_tables(graph)
        levels = np.zeros(fwd.shape, dtype=np.int_)
        inside = (fwd != NO_SITE) & (bwd != NO_SITE)
        levels[inside] = Region.INTERIOR_H
        current = inside
        for region in (Region.INTERIOR_2H, Region.INTERIOR_3H):
            cols = np.arange(fwd.shape[1])
            deeper = (
                current
                & current[np.where(fwd == NO_SITE, 0, fwd), cols]
                & current[np.where(bwd == NO_SITE, 0, bwd), cols]
            )
            levels[deeper] = region
            current = deeper
        return levels


def shift(lattice: Lattice, site: int, edge: tuple[int, int], sign: int) -> int | None:
    idx = int(lattice.neighbors(edge, sign)[site])
    return None if idx == NO_SITE else idx


def classify(lattice: Lattice, site: int, edge: tuple[int, int]) -> Region:
    level = Region.BOUNDARY_LAYER
    frontier = {site}
    for region in (Region.INTERIOR_H, Region.INTERIOR_2H, Region.INTERIOR_3H):
        nxt: set[int] = set()
        for x in frontier:
            for sign in (1, -1):
                y = shift(lattice, x, edge, sign)
                if y is None:
                    return level
                nxt.add(y)
        level = region
        frontier = nxt
    return level


def nearest_site(lattice: Lattice, xi: npt.ArrayLike, interior: bool = True) -> int:
    """Closest site to xi in the Euclidean norm; ties go to the lowest index."""
    target = np.asarray(xi, dtype=np.float64)
    if target.shape != (lattice.d,):
        raise DomainError(f"xi must have {lattice.d} entries")
    distance = np.sum((lattice.xi - target) ** 2, axis=1)
    if interior:
        distance = np.where(lattice.on_boundary, np.inf, distance)
    if not np.isfinite(distance).any():
        raise DomainError(f"lattice d={lattice.d}, N={lattice.N} has no interior sites")
    return int(np.argmin(distance))


def build_lattice(d: int, N: int, site_budget: int | None = None) -> Lattice:
    return Lattice.build(d, N, site_budget)


@dataclass
class Field:
    lattice: Lattice
    values: FloatArray

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != (self.lattice.n_sites,):
            raise LatticeMismatchError(
                f"field has {values.shape} values, lattice has {self.lattice.n_sites} sites"
            )
        self.values = values

    @classmethod
    def zeros(cls, lattice: Lattice) -> Field:
        return cls(lattice, np.zeros(lattice.n_sites))

    def same_lattice(self, other: Field) -> None:
        if self.lattice is other.lattice:
            return
        if (self.lattice.d, self.lattice.N) != (other.lattice.d, other.lattice.N):
            raise LatticeMismatchError(
                f"fields live on (d={self.lattice.d}, N={self.lattice.N}) and "
                f"(d={other.lattice.d}, N={other.lattice.N})"
            )

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))


def lattice_sum(values: FloatArray) -> float:
    """Deterministic pairwise reduction over a contiguous site vector."""
    return float(np.add.reduce(np.ascontiguousarray(values, dtype=np.float64)))


def weighted_l1(field: Field, weight: Field) -> float:
    field.same_lattice(weight)
    return lattice_sum(np.abs(field.values) * weight.values) * field.lattice.cell_volume


def write_field_csv(path: Path, field: Field, digits: int = 17) -> None:
    lattice = field.lattice
    header = ",".join(
        ["site_id"]
        + [f"s_{k + 1}" for k in range(lattice.d - 1)]
        + [f"xi_{k + 1}" for k in range(lattice.d)]
        + ["value"]
    )
    table = np.column_stack(
        [np.arange(lattice.n_sites), lattice.s, lattice.xi, field.values]
    )
    fmt = ["%d"] + [f"%.{digits}g"] * (table.shape[1] - 1)
    np.savetxt(path, table, fmt=fmt, delimiter=",", header=header, comments="", newline="\n")
