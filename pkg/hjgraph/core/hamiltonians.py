"""Continuous and numerical Hamiltonians with their analytic edge derivatives.

All kernels work edgewise on the coefficient ``a = I(xi)^-2 * g_ij(xi)``, so a
(sites, edges) array of coefficients evaluates the whole lattice at once.
Points outside the simplex, and boundary points (where ``I^-2 = 0``), give
``a = 0`` and therefore a vanishing Hamiltonian.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, Field

from hjgraph.core.graph import (
    FloatArray,
    Graph,
    MetricKind,
    SimplexPoint,
    edge_metric,
    inv_sum_power,
    is_in_simplex,
)
from hjgraph.exceptions import DomainError

logger = logging.getLogger(__name__)

KAPPA = 2.0
CONSISTENCY_TOL = 1e-12
# finite-difference step for the derivative cross-check
FD_STEP = 1e-6
MAX_WITNESSES = 10


class SchemeKind(StrEnum):
    LAX_FRIEDRICHS = "lax_friedrichs"
    OSHER_SETHIAN = "osher_sethian"


@dataclass(frozen=True)
class HamiltonianSpec:
    scheme: SchemeKind
    r0: float
    gamma: float | None = None

    def __post_init__(self) -> None:
        if not self.r0 > 0.0:
            raise DomainError(f"R0 must be positive, got {self.r0}")
        if self.gamma is not None and not self.gamma > 0.0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")

    @property
    def kappa(self) -> float:
        return KAPPA

    @property
    def viscosity(self) -> float:
        return 2.0 * self.r0 if self.gamma is None else self.gamma

    def with_r0(self, r0: float) -> HamiltonianSpec:
        return HamiltonianSpec(self.scheme, r0, self.gamma)

    def edge_values(self, a: FloatArray, p: FloatArray, q: FloatArray) -> FloatArray:
        if self.scheme is SchemeKind.LAX_FRIEDRICHS:
            return a * (0.5 * (p * p + q * q) - self.viscosity * (p - q))
        return a * (np.maximum(q, 0.0) ** 2 + np.minimum(p, 0.0) ** 2)

    def partial_p(self, a: FloatArray, p: FloatArray, q: FloatArray) -> FloatArray:
        if self.scheme is SchemeKind.LAX_FRIEDRICHS:
            return a * (p - self.viscosity)
        return 2.0 * a * np.minimum(p, 0.0)

    def partial_q(self, a: FloatArray, p: FloatArray, q: FloatArray) -> FloatArray:
        if self.scheme is SchemeKind.LAX_FRIEDRICHS:
            return a * (q + self.viscosity)
        return 2.0 * a * np.maximum(q, 0.0)

    def second_derivatives(
        self, a: FloatArray, p: FloatArray, q: FloatArray
    ) -> tuple[FloatArray, FloatArray, FloatArray]:
        """Per-edge (d2/dp2, d2/dq2, d2/dpdq); the Hessian is diagonal across edges."""
        mixed = np.zeros_like(a)
        if self.scheme is SchemeKind.LAX_FRIEDRICHS:
            return a.copy(), a.copy(), mixed
        return 2.0 * a * (p < 0.0), 2.0 * a * (q > 0.0), mixed


def hamiltonian_coefficients(
    graph: Graph, kind: MetricKind, xis: npt.ArrayLike
) -> FloatArray:
    """a = I^-2 * g_ij for a stack of points, shape (n, n_edges)."""
    arr = np.atleast_2d(np.asarray(xis, dtype=np.float64))
    return np.asarray(
        inv_sum_power(arr, KAPPA)[:, None] * edge_metric(graph, kind, arr),
        dtype=np.float64,
    )


def _point_coefficients(
    graph: Graph, kind: MetricKind, xi: SimplexPoint | npt.ArrayLike
) -> FloatArray:
    point = xi.xi if isinstance(xi, SimplexPoint) else np.asarray(xi, dtype=np.float64)
    if point.shape != (graph.d,):
        raise DomainError(f"xi must have {graph.d} entries")
    if not is_in_simplex(point):
        # zero extension
        return np.zeros(graph.n_edges)
    return hamiltonian_coefficients(graph, kind, point)[0]


def _edge_vector(graph: Graph, values: npt.ArrayLike, name: str) -> FloatArray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.shape != (graph.n_edges,):
        raise DomainError(f"{name} must have one entry per edge ({graph.n_edges})")
    return arr


def continuous_H(
    graph: Graph, kind: MetricKind, xi: SimplexPoint | npt.ArrayLike, P: npt.ArrayLike
) -> float:
    """I^-2(xi) * ||P||_xi^2, zero on the boundary."""
    a = _point_coefficients(graph, kind, xi)
    p = _edge_vector(graph, P, "P")
    return float(np.sum(a * p * p))


def numerical_G(
    spec: HamiltonianSpec,
    graph: Graph,
    kind: MetricKind,
    xi: SimplexPoint | npt.ArrayLike,
    P: npt.ArrayLike,
    Q: npt.ArrayLike,
) -> float:
    a = _point_coefficients(graph, kind, xi)
    p = _edge_vector(graph, P, "P")
    q = _edge_vector(graph, Q, "Q")
    return float(np.sum(spec.edge_values(a, p, q)))


def dG_dp(
    spec: HamiltonianSpec,
    graph: Graph,
    kind: MetricKind,
    xi: SimplexPoint | npt.ArrayLike,
    P: npt.ArrayLike,
    Q: npt.ArrayLike,
    edge: tuple[int, int],
) -> float:
    k = graph.edge_position(edge)
    a = _point_coefficients(graph, kind, xi)
    p = _edge_vector(graph, P, "P")
    q = _edge_vector(graph, Q, "Q")
    return float(spec.partial_p(a, p, q)[k])


def dG_dq(
    spec: HamiltonianSpec,
    graph: Graph,
    kind: MetricKind,
    xi: SimplexPoint | npt.ArrayLike,
    P: npt.ArrayLike,
    Q: npt.ArrayLike,
    edge: tuple[int, int],
) -> float:
    k = graph.edge_position(edge)
    a = _point_coefficients(graph, kind, xi)
    p = _edge_vector(graph, P, "P")
    q = _edge_vector(graph, Q, "Q")
    return float(spec.partial_q(a, p, q)[k])


def os_dissipation(a: FloatArray, p: FloatArray, q: FloatArray) -> FloatArray:
    """G_OS edge term minus the continuous edge term at the midpoint (p+q)/2."""
    upwind = a * (np.maximum(q, 0.0) ** 2 + np.minimum(p, 0.0) ** 2)
    mid = 0.5 * (p + q)
    return np.asarray(upwind - a * mid * mid, dtype=np.float64)


def hessian_bound(d: int) -> float:
    """C with 0 <= d2G <= C * g_ij; sup I^-2 = d^-4 is attained at the barycenter."""
    return 2.0 * float(d) ** -4


class Witness(BaseModel):
    check: str
    xi: list[float]
    p: list[float]
    q: list[float]
    value: float


class AssumptionAudit(BaseModel):
    scheme: SchemeKind
    metric: MetricKind
    d: int
    samples: int = Field(gt=0)
    r0: float
    gamma: float
    monotonicity_violations: int = 0
    consistency_max_residual: float = 0.0
    consistency_violations: int = 0
    lipschitz_max_ratio: float = 0.0
    hessian_violations: int = 0
    derivative_max_error: float = 0.0
    derivative_violations: int = 0
    witnesses: list[Witness] = []

    @property
    def violations(self) -> int:
        return (
            self.monotonicity_violations
            + self.consistency_violations
            + self.hessian_violations
            + self.derivative_violations
            + int(not np.isfinite(self.lipschitz_max_ratio))
        )

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _collect(
    report: AssumptionAudit,
    check: str,
    mask: npt.NDArray[np.bool_],
    xis: FloatArray,
    P: FloatArray,
    Q: FloatArray,
    values: FloatArray,
) -> int:
    rows = np.flatnonzero(mask)
    for row in rows[: max(0, MAX_WITNESSES - len(report.witnesses))]:
        report.witnesses.append(
            Witness(
                check=check,
                xi=xis[row].tolist(),
                p=P[row].tolist(),
                q=Q[row].tolist(),
                value=float(values[row]),
            )
        )
    return int(rows.size)


def audit_assumptions(
    spec: HamiltonianSpec,
    graph: Graph,
    kind: MetricKind,
    samples: int,
    seed: int = 0,
) -> AssumptionAudit:
    """Monte-Carlo audit of monotonicity, consistency, Lipschitz and Hessian bounds
    over interior points and gradients in the R0-ball."""
    rng = np.random.default_rng(seed)
    xis = rng.dirichlet(np.ones(graph.d), size=samples)
    xis = xis[np.all(xis > 0.0, axis=1)]
    n, n_edges = xis.shape[0], graph.n_edges
    P = rng.uniform(-spec.r0, spec.r0, size=(n, n_edges))
    Q = rng.uniform(-spec.r0, spec.r0, size=(n, n_edges))
    a = hamiltonian_coefficients(graph, kind, xis)
    g = edge_metric(graph, kind, xis)

    report = AssumptionAudit(
        scheme=spec.scheme,
        metric=kind,
        d=graph.d,
        samples=n,
        r0=spec.r0,
        gamma=spec.viscosity,
    )

    dp = spec.partial_p(a, P, Q)
    dq = spec.partial_q(a, P, Q)
    sign_bad = np.any(dp > 0.0, axis=1) | np.any(dq < 0.0, axis=1)
    sign_value = np.maximum(dp.max(axis=1), -dq.min(axis=1))
    report.monotonicity_violations = _collect(
        report, "monotonicity", sign_bad, xis, P, Q, sign_value
    )

    G_pp = spec.edge_values(a, P, P).sum(axis=1)
    H = (a * P * P).sum(axis=1)
    residual = np.abs(G_pp - H)
    consistency_bad = residual > CONSISTENCY_TOL * (1.0 + np.abs(H))
    report.consistency_max_residual = float(residual.max(initial=0.0))
    report.consistency_violations = _collect(
        report, "consistency", consistency_bad, xis, P, P, residual
    )

    P2 = rng.uniform(-spec.r0, spec.r0, size=P.shape)
    Q2 = rng.uniform(-spec.r0, spec.r0, size=Q.shape)
    G = spec.edge_values(a, P, Q).sum(axis=1)
    G2 = spec.edge_values(a, P2, Q2).sum(axis=1)
    dist = np.max(np.abs(P - P2), axis=1) + np.max(np.abs(Q - Q2), axis=1)
    ratio = np.abs(G - G2) / np.maximum(dist, np.finfo(np.float64).tiny)
    report.lipschitz_max_ratio = float(ratio.max(initial=0.0))

    bound = hessian_bound(graph.d) * g * (1.0 + CONSISTENCY_TOL)
    hess_bad = np.zeros(n, dtype=bool)
    for block in spec.second_derivatives(a, P, Q)[:2]:
        hess_bad |= np.any((block < 0.0) | (block > bound), axis=1)
    mixed = spec.second_derivatives(a, P, Q)[2]
    hess_bad |= np.any(mixed != 0.0, axis=1)
    report.hessian_violations = _collect(
        report, "hessian", hess_bad, xis, P, Q, np.zeros(n)
    )

    # analytic derivatives vs central differences of the edge terms
    fd_p = (spec.edge_values(a, P + FD_STEP, Q) - spec.edge_values(a, P - FD_STEP, Q)) / (
        2.0 * FD_STEP
    )
    fd_q = (spec.edge_values(a, P, Q + FD_STEP) - spec.edge_values(a, P, Q - FD_STEP)) / (
        2.0 * FD_STEP
    )
    smooth = (np.abs(P) > 2.0 * FD_STEP) & (np.abs(Q) > 2.0 * FD_STEP)
    err = np.where(smooth, np.maximum(np.abs(fd_p - dp), np.abs(fd_q - dq)), 0.0)
    scale = 1.0 + np.maximum(np.abs(dp), np.abs(dq))
    deriv_bad = np.any(err > 1e-5 * scale, axis=1)
    report.derivative_max_error = float(err.max(initial=0.0))
    report.derivative_violations = _collect(
        report, "derivative", deriv_bad, xis, P, Q, err.max(axis=1)
    )

    logger.info(
        "assumption audit %s/%s d=%d: %d samples, %d violations",
        spec.scheme,
        kind,
        graph.d,
        n,
        report.violations,
    )
    return report
