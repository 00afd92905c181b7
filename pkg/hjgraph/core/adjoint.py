"""Linearized dual problems along a solved trajectory.

The forward dual steps ``phi <- phi - dt * L_n phi``. The backward adjoint
evolves ``rho = sigma * w`` with the exact transpose of that step, so
``sum rho^n phi^n`` is the same at every level and ``sum rho`` is conserved.
Products ``rho * A`` and ``rho * B`` use zero extension outside the lattice,
test functions and weights use constant extrapolation.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from dataclasses import dataclass, field

import numpy as np

from hjgraph.core.graph import FloatArray
from hjgraph.core.mesh import Field, Lattice, lattice_sum
from hjgraph.core.scheme import CoefficientTrajectory, LinearizedCoeffs, Stencil
from hjgraph.exceptions import (
    CFLViolationError,
    DomainError,
    LatticeMismatchError,
    NegativeMassError,
)

logger = logging.getLogger(__name__)

MAX_PRINCIPLE_TOL = 1e-12
NEGATIVITY_TOL = 1e-12


@dataclass(frozen=True)
class DiracTerminal:
    site: int


@dataclass(frozen=True, eq=False)
class GeneralTerminal:
    nu: Field


Terminal = DiracTerminal | GeneralTerminal


@dataclass
class AdjointState:
    t: float
    sigma: Field
    rho: Field


@dataclass
class ConservationTimeline:
    times: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    min_sigma: list[float] = field(default_factory=list)
    max_wsigma: list[float] = field(default_factory=list)

    def table(self) -> FloatArray:
        """Columns t, mass, min_sigma, max_wsigma in increasing t."""
        return np.column_stack([self.times, self.mass, self.min_sigma, self.max_wsigma])

    def mass_drift(self, reference: float = 1.0) -> float:
        return float(np.max(np.abs(np.asarray(self.mass) - reference)))


@dataclass
class AdjointSolution:
    """Adjoint states ordered by increasing time."""

    states: list[AdjointState]
    weight: Field
    terminal: Terminal
    conservation: ConservationTimeline

    @property
    def times(self) -> list[float]:
        return [state.t for state in self.states]

    def at(self, t: float) -> AdjointState:
        for state in self.states:
            if abs(state.t - t) <= 1e-12 * max(1.0, abs(t)):
                return state
        raise DomainError(f"no adjoint level at t={t}")


@dataclass
class DualSolution:
    times: list[float]
    fields: list[Field]


def _per_edge_sum(stencil: Stencil, per_edge: FloatArray) -> FloatArray:
    return np.asarray(np.sum(stencil.scale * per_edge, axis=1), dtype=np.float64)


def linearized_apply(coeffs: LinearizedCoeffs, phi: Field | FloatArray) -> Field:
    """L_h phi = sum_e (sqrt(omega)/h) (A D+phi + B D-phi)."""
    stencil = coeffs.stencil
    values = phi.values if isinstance(phi, Field) else np.asarray(phi, dtype=np.float64)
    if values.shape != (stencil.lattice.n_sites,):
        raise DomainError("phi does not live on the coefficient lattice")
    per_edge = coeffs.A * stencil.forward_diff(values) + coeffs.B * stencil.backward_diff(
        values
    )
    return Field(stencil.lattice, _per_edge_sum(stencil, per_edge))


def transpose_apply(coeffs: LinearizedCoeffs, rho: FloatArray) -> FloatArray:
    """L_h^T rho = -sum_e (sqrt(omega)/h) (D-[rho A] + D+[rho B]), zero extension."""
    stencil = coeffs.stencil
    per_edge = stencil.backward_diff_zero(rho[:, None] * coeffs.A) + stencil.forward_diff_zero(
        rho[:, None] * coeffs.B
    )
    return -_per_edge_sum(stencil, per_edge)


def forward_dual_solve(
    trajectory: CoefficientTrajectory, f: Field, t0: float = 0.0
) -> DualSolution:
    times = trajectory.times
    first = _level_index(times, t0)
    phi = f.values.copy()
    lattice = trajectory.lattice
    out_times = [times[first]]
    fields = [Field(lattice, phi.copy())]
    lo, hi = float(phi.min()), float(phi.max())

    for n, dt, coeffs in trajectory.forward():
        if n < first:
            continue
        phi = phi - dt * linearized_apply(coeffs, phi).values
        new_lo, new_hi = float(phi.min()), float(phi.max())
        tol = MAX_PRINCIPLE_TOL * max(1.0, abs(lo), abs(hi))
        if new_lo < lo - tol or new_hi > hi + tol:
            raise CFLViolationError(
                f"maximum principle broken at step {n + 1}: "
                f"range [{lo:.17g}, {hi:.17g}] -> [{new_lo:.17g}, {new_hi:.17g}]",
                step=n + 1,
            )
        lo, hi = new_lo, new_hi
        out_times.append(times[n + 1])
        fields.append(Field(lattice, phi.copy()))
    return DualSolution(out_times, fields)


def _level_index(times: list[float], t: float) -> int:
    arr = np.asarray(times)
    idx = int(np.argmin(np.abs(arr - t)))
    if abs(arr[idx] - t) > 1e-12 * max(1.0, abs(t)):
        raise DomainError(f"t={t} is not a time level of the trajectory")
    return idx


def _terminal_rho(terminal: Terminal, weight: Field) -> FloatArray:
    lattice = weight.lattice
    if isinstance(terminal, DiracTerminal):
        if not 0 <= terminal.site < lattice.n_sites:
            raise DomainError(f"site {terminal.site} is not on the lattice")
        if weight.values[terminal.site] == 0.0:
            raise DomainError(
                f"Dirac site {terminal.site} has zero weight; pick an interior site"
            )
        rho = np.zeros(lattice.n_sites)
        rho[terminal.site] = 1.0 / lattice.cell_volume
        return rho
    terminal.nu.same_lattice(weight)
    return np.asarray(terminal.nu.values * weight.values, dtype=np.float64)


def _sigma(rho: FloatArray, weight: FloatArray) -> FloatArray:
    sigma = np.zeros_like(rho)
    interior = weight > 0.0
    sigma[interior] = rho[interior] / weight[interior]
    return sigma


def adjoint_backward_solve(
    trajectory: CoefficientTrajectory, weight: Field, terminal: Terminal
) -> AdjointSolution:
    lattice = trajectory.lattice
    if weight.values.shape != (lattice.n_sites,):
        raise LatticeMismatchError("weight does not live on the trajectory lattice")
    w = weight.values
    volume = lattice.cell_volume
    rho = _terminal_rho(terminal, weight)
    scale = max(float(np.max(np.abs(rho))), 1.0)

    levels: list[tuple[float, FloatArray]] = [(trajectory.times[-1], rho.copy())]
    for n, dt, coeffs in trajectory.backward():
        rho = rho - dt * transpose_apply(coeffs, rho)
        if float(rho.min()) < -NEGATIVITY_TOL * scale and _is_nonnegative(terminal):
            raise NegativeMassError(
                f"adjoint density negative ({rho.min():.3g}) at step {n}", step=n
            )
        levels.append((trajectory.times[n], rho.copy()))
    levels.reverse()

    interior = w > 0.0
    states: list[AdjointState] = []
    conservation = ConservationTimeline()
    for t, values in levels:
        sigma = _sigma(values, w)
        states.append(AdjointState(t, Field(lattice, sigma), Field(lattice, values)))
        conservation.times.append(t)
        conservation.mass.append(lattice_sum(values) * volume)
        conservation.min_sigma.append(
            float(sigma[interior].min()) if np.any(interior) else 0.0
        )
        conservation.max_wsigma.append(float(np.max(np.abs(values))))

    logger.info(
        "adjoint solved over %d levels, mass drift %.3g",
        len(states),
        conservation.mass_drift(conservation.mass[-1]),
    )
    return AdjointSolution(states, weight, terminal, conservation)


def _is_nonnegative(terminal: Terminal) -> bool:
    if isinstance(terminal, DiracTerminal):
        return True
    return bool(np.all(terminal.nu.values >= 0.0))


def ibp_sides(
    weight: Field,
    coeffs: LinearizedCoeffs,
    phi: Field,
    sigma: Field,
    edge: int | None = None,
) -> tuple[float, float, float]:
    """(lhs, rhs, scale) of sum w sigma L phi = sum phi L^T[sigma w] times h^(d-1).

    ``edge`` restricts both sides to one column of the edge list.
    """
    stencil = coeffs.stencil
    phi.same_lattice(sigma)
    phi.same_lattice(weight)
    cols = slice(None) if edge is None else slice(edge, edge + 1)
    rho = sigma.values * weight.values
    scale_e = stencil.scale[cols]

    applied = coeffs.A[:, cols] * stencil.forward_diff(phi.values)[:, cols] + coeffs.B[
        :, cols
    ] * stencil.backward_diff(phi.values)[:, cols]
    lhs_terms = rho * np.sum(scale_e * applied, axis=1)

    fluxes = stencil.backward_diff_zero(rho[:, None] * coeffs.A)[:, cols] + (
        stencil.forward_diff_zero(rho[:, None] * coeffs.B)[:, cols]
    )
    rhs_terms = -phi.values * np.sum(scale_e * fluxes, axis=1)

    volume = stencil.lattice.cell_volume
    scale = (lattice_sum(np.abs(lhs_terms)) + lattice_sum(np.abs(rhs_terms))) * volume
    return lattice_sum(lhs_terms) * volume, lattice_sum(rhs_terms) * volume, scale


def ibp_check(
    weight: Field,
    coeffs: LinearizedCoeffs,
    phi: Field,
    sigma: Field,
    edge: int | None = None,
) -> float:
    lhs, rhs, _ = ibp_sides(weight, coeffs, phi, sigma, edge)
    return abs(lhs - rhs)


def conservative_divergence(
    weight: Field, coeffs: LinearizedCoeffs, sigma: Field
) -> FloatArray:
    """(1/w) sum_e c (D-[sigma A w] + D+[sigma B w]) at sites with w > 0, else 0."""
    stencil = coeffs.stencil
    w = weight.values
    rho = sigma.values * w
    per_edge = stencil.backward_diff_zero(rho[:, None] * coeffs.A) + stencil.forward_diff_zero(
        rho[:, None] * coeffs.B
    )
    return _sigma(_per_edge_sum(stencil, per_edge), w)


def plain_divergence(coeffs: LinearizedCoeffs, sigma: Field) -> FloatArray:
    stencil = coeffs.stencil
    s = sigma.values
    per_edge = stencil.backward_diff_zero(s[:, None] * coeffs.A) + stencil.forward_diff_zero(
        s[:, None] * coeffs.B
    )
    return _per_edge_sum(stencil, per_edge)


def geometric_drift(weight: Field, coeffs: LinearizedCoeffs, sigma: Field) -> Field:
    """S = sum_e c [(D-w / w)(sigma A)(x - hm) + (D+w / w)(sigma B)(x + hm)]."""
    stencil = coeffs.stencil
    w = weight.values
    s = sigma.values
    back = stencil.backward_diff(w)
    fwd = stencil.forward_diff(w)
    per_edge = back * stencil.take_bwd(s[:, None] * coeffs.A) + fwd * stencil.take_fwd(
        s[:, None] * coeffs.B
    )
    return Field(stencil.lattice, _sigma(_per_edge_sum(stencil, per_edge), w))


def decomposition_residual(weight: Field, coeffs: LinearizedCoeffs, sigma: Field) -> float:
    """max |conservative - (plain + drift)| over sites with w > 0, relative to the
    size of the fluxes entering each site (at least 1)."""
    w = weight.values
    interior = w > 0.0
    if not np.any(interior):
        return 0.0
    stencil = coeffs.stencil
    conservative = conservative_divergence(weight, coeffs, sigma)
    decomposed = plain_divergence(coeffs, sigma) + geometric_drift(weight, coeffs, sigma).values
    flux_a = np.abs(sigma.values[:, None] * coeffs.A)
    flux_b = np.abs(sigma.values[:, None] * coeffs.B)
    w_edges = np.repeat(w[:, None], stencil.n_edges, axis=1)
    safe = np.where(w_edges > 0.0, w_edges, 1.0)
    ratio_b = stencil.take_bwd(w_edges) / safe
    ratio_f = stencil.take_fwd(w_edges) / safe
    magnitude = _per_edge_sum(
        stencil,
        flux_a + flux_b + stencil.take_bwd(flux_a) * (1.0 + ratio_b)
        + stencil.take_fwd(flux_b) * (1.0 + ratio_f),
    )
    scale = max(1.0, float(np.max(magnitude[interior])))
    return float(np.max(np.abs(conservative - decomposed)[interior])) / scale


def pairing(rho: Field, phi: Field) -> float:
    """sum rho * phi * h^(d-1)."""
    rho.same_lattice(phi)
    return lattice_sum(rho.values * phi.values) * rho.lattice.cell_volume


def duality_check(
    trajectory: CoefficientTrajectory,
    adjoint: AdjointSolution,
    phi: Callable[[float, Lattice], FloatArray],
) -> float:
    """|int_0^T sum sigma (d_t phi + L phi) w dt - <rho(T), phi(T)> + <rho(0), phi(0)>|.

    Time integral by the trapezoid rule over the trajectory levels; d_t phi by
    finite differences across levels.
    """
    lattice = trajectory.lattice
    times = np.asarray(trajectory.times)
    if len(adjoint.states) != times.size:
        raise DomainError("adjoint and trajectory have different time levels")
    volume = lattice.cell_volume
    phis = np.stack([np.asarray(phi(float(t), lattice), dtype=np.float64) for t in times])
    dphi = (
        np.gradient(phis, times, axis=0) if times.size > 1 else np.zeros_like(phis)
    )

    integrand = np.zeros(times.size)
    coeffs_by_level: dict[int, LinearizedCoeffs] = {
        n: c for n, _, c in trajectory.forward()
    }
    for k in range(times.size):
        coeffs = coeffs_by_level[min(k, trajectory.n_steps - 1)]
        generator = dphi[k] + linearized_apply(coeffs, phis[k]).values
        integrand[k] = lattice_sum(adjoint.states[k].rho.values * generator) * volume

    integral = float(np.trapezoid(integrand, times))
    end = lattice_sum(adjoint.states[-1].rho.values * phis[-1]) * volume
    start = lattice_sum(adjoint.states[0].rho.values * phis[0]) * volume
    return abs(integral - end + start)
