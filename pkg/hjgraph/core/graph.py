"""The finite graph, its metric tensors and the xi-weighted edge algebra.

Edge-indexed quantities are stored as 1-D arrays ordered like
``Graph.edges`` (unordered pairs ``i < j``, 0-based). Every edge sum in this
package runs over these unordered pairs.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum

import networkx as nx
import numpy as np
import numpy.typing as npt

from hjgraph.exceptions import DomainError

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]

SIMPLEX_TOL = 1e-12
# relative gap below which the logarithmic mean switches to its series
LOG_MEAN_SERIES_GAP = 1e-8


class MetricKind(StrEnum):
    AVERAGE = "average"
    LOGARITHMIC = "logarithmic"
    HARMONIC = "harmonic"


@dataclass(frozen=True, eq=False)
class Graph:
    d: int
    omega: FloatArray
    edges: tuple[tuple[int, int], ...] = field(init=False)
    sqrt_omega: FloatArray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        omega = np.array(self.omega, dtype=np.float64)
        if self.d < 2:
            raise DomainError(f"graph needs at least 2 vertices, got d={self.d}")
        if omega.shape != (self.d, self.d):
            raise DomainError(
                f"omega must be {self.d}x{self.d}, got shape {omega.shape}"
            )
        if np.any(omega < 0):
            raise DomainError("omega entries must be nonnegative")
        if not np.array_equal(omega, omega.T):
            raise DomainError("omega must be symmetric")
        if np.any(np.diag(omega) != 0):
            raise DomainError("omega must have a zero diagonal")

        edges = tuple(
            (i, j) for i in range(self.d) for j in range(i + 1, self.d) if omega[i, j] > 0
        )
        nx_graph = nx.Graph()
        nx_graph.add_nodes_from(range(self.d))
        nx_graph.add_edges_from(edges)
        if not nx.is_connected(nx_graph):
            raise DomainError("graph must be connected")

        omega.setflags(write=False)
        sqrt_omega = np.sqrt(np.array([omega[i, j] for i, j in edges]))
        sqrt_omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "sqrt_omega", sqrt_omega)

    @classmethod
    def from_omega(cls, omega: npt.ArrayLike) -> Graph:
        matrix = np.asarray(omega, dtype=np.float64)
        return cls(d=matrix.shape[0], omega=matrix)

    @classmethod
    def two_node(cls, weight: float = 1.0) -> Graph:
        return cls.from_omega([[0.0, weight], [weight, 0.0]])

    @classmethod
    def complete(cls, d: int, weight: float = 1.0) -> Graph:
        omega = weight * (np.ones((d, d)) - np.eye(d))
        return cls.from_omega(omega)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def edge_i(self) -> npt.NDArray[np.intp]:
        return np.array([i for i, _ in self.edges], dtype=np.intp)

    @property
    def edge_j(self) -> npt.NDArray[np.intp]:
        return np.array([j for _, j in self.edges], dtype=np.intp)

    def edge_position(self, edge: tuple[int, int]) -> int:
        i, j = edge
        if i > j:
            i, j = j, i
        try:
            return self.edges.index((i, j))
        except ValueError:
            raise DomainError(f"({i}, {j}) is not an edge of the graph") from None


@dataclass(frozen=True, eq=False)
class SimplexPoint:
    xi: FloatArray

    def __post_init__(self) -> None:
        xi = np.array(self.xi, dtype=np.float64)
        if xi.ndim != 1:
            raise DomainError("a simplex point is a 1-D vector")
        if not is_in_simplex(xi):
            raise DomainError(f"{xi.tolist()} is not a point of the probability simplex")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @property
    def d(self) -> int:
        return int(self.xi.shape[0])

    @property
    def on_boundary(self) -> bool:
        return bool(np.any(self.xi == 0.0))


def is_in_simplex(xi: npt.ArrayLike, tol: float = SIMPLEX_TOL) -> bool:
    arr = np.asarray(xi, dtype=np.float64)
    return bool(np.all(arr >= 0.0) and abs(float(arr.sum()) - 1.0) <= tol)


def _as_xi(xi: SimplexPoint | npt.ArrayLike) -> FloatArray:
    if isinstance(xi, SimplexPoint):
        return xi.xi
    return SimplexPoint(np.asarray(xi, dtype=np.float64)).xi


def metric_values(kind: MetricKind, t: npt.ArrayLike, r: npt.ArrayLike) -> FloatArray:
    """Vectorized g(t, r) for nonnegative arrays of matching shape."""
    t_arr = np.asarray(t, dtype=np.float64)
    r_arr = np.asarray(r, dtype=np.float64)
    if np.any(t_arr < 0) or np.any(r_arr < 0):
        raise DomainError("metric weights are defined for nonnegative arguments only")
    t_arr, r_arr = np.broadcast_arrays(t_arr, r_arr)

    if kind is MetricKind.AVERAGE:
        return np.asarray(0.5 * (t_arr + r_arr), dtype=np.float64)

    out = np.zeros(t_arr.shape, dtype=np.float64)
    positive = (t_arr > 0) & (r_arr > 0)
    tp = t_arr[positive]
    rp = r_arr[positive]

    if kind is MetricKind.HARMONIC:
        out[positive] = 2.0 / (1.0 / tp + 1.0 / rp)
        return out

    # logarithmic mean
    gap = np.abs(tp - rp)
    near = gap <= LOG_MEAN_SERIES_GAP * np.maximum(tp, rp)
    vals = np.empty_like(tp)
    mean = 0.5 * (tp[near] + rp[near])
    vals[near] = mean - (tp[near] - rp[near]) ** 2 / (12.0 * mean)
    far = ~near
    hi = np.maximum(tp[far], rp[far])
    lo = np.minimum(tp[far], rp[far])
    vals[far] = (hi - lo) / np.log1p((hi - lo) / lo)
    out[positive] = vals
    return out


def metric_weight(kind: MetricKind, t: float, r: float) -> float:
    return float(metric_values(kind, t, r))


def edge_metric(graph: Graph, kind: MetricKind, xi: npt.ArrayLike) -> FloatArray:
    """g_{i,j}(xi) on every edge; accepts one point or a stack of points."""
    xis = np.asarray(xi, dtype=np.float64)
    return metric_values(kind, xis[..., graph.edge_i], xis[..., graph.edge_j])


def inv_sum(xi: SimplexPoint | npt.ArrayLike) -> float:
    arr = _as_xi(xi)
    if np.any(arr == 0.0):
        return math.inf
    return float(np.sum(1.0 / arr))


def inv_sum_power(xis: npt.ArrayLike, kappa: float = 2.0) -> FloatArray:
    """I(xi)^(-kappa) for a stack of points, exactly 0 where any xi_i = 0."""
    arr = np.atleast_2d(np.asarray(xis, dtype=np.float64))
    out = np.zeros(arr.shape[0], dtype=np.float64)
    interior = np.all(arr > 0.0, axis=1)
    out[interior] = np.sum(1.0 / arr[interior], axis=1) ** (-kappa)
    return out


def xi_inner(
    graph: Graph,
    kind: MetricKind,
    xi: SimplexPoint | npt.ArrayLike,
    P: npt.ArrayLike,
    Q: npt.ArrayLike,
) -> float:
    g = edge_metric(graph, kind, _as_xi(xi))
    return float(np.sum(np.asarray(P, dtype=np.float64) * np.asarray(Q, dtype=np.float64) * g))


def xi_norm_sq(
    graph: Graph, kind: MetricKind, xi: SimplexPoint | npt.ArrayLike, P: npt.ArrayLike
) -> float:
    return xi_inner(graph, kind, xi, P, P)


def graph_gradient(graph: Graph, phi: npt.ArrayLike) -> FloatArray:
    values = np.asarray(phi, dtype=np.float64)
    if values.shape != (graph.d,):
        raise DomainError(f"phi must have {graph.d} entries")
    return np.asarray(
        graph.sqrt_omega * (values[graph.edge_i] - values[graph.edge_j]), dtype=np.float64
    )


def divergence(
    graph: Graph,
    kind: MetricKind,
    xi: SimplexPoint | npt.ArrayLike,
    upsilon: npt.ArrayLike,
) -> FloatArray:
    """div_xi(upsilon)_i = sum_j sqrt(omega_ij) upsilon_ji g_ij(xi)."""
    ups = np.asarray(upsilon, dtype=np.float64)
    if ups.shape != (graph.d, graph.d):
        raise DomainError(f"upsilon must be {graph.d}x{graph.d}")
    if not np.allclose(ups, -ups.T, rtol=0.0, atol=1e-14):
        raise DomainError("upsilon must be skew-symmetric")
    point = _as_xi(xi)
    g = metric_values(kind, point[:, None], point[None, :])
    np.fill_diagonal(g, 0.0)
    weights = np.sqrt(graph.omega) * g
    return np.asarray(np.sum(weights * ups.T, axis=1), dtype=np.float64)
