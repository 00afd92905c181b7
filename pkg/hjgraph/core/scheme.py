"""Semi-discrete monotone scheme u_t = -G(xi, [D+u], [D-u]) - F and its diagnostics."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field, replace
from enum import StrEnum

import numpy as np
import numpy.typing as npt

from hjgraph.core.graph import FloatArray, Graph, MetricKind
from hjgraph.core.hamiltonians import HamiltonianSpec, hamiltonian_coefficients
from hjgraph.core.mesh import NO_SITE, Field, IndexArray, Lattice, lattice_sum
from hjgraph.core.problems import Problem
from hjgraph.core.weights import WeightSpec
from hjgraph.exceptions import DivergenceError, DomainError

logger = logging.getLogger(__name__)

SPEED_FLOOR = 1e-12
R0_FLOOR = 1.0
R0_SAFETY = 1.5
# steps closer than this (relative to T) to a landing time are merged into it
LANDING_TOL = 1e-12


class Integrator(StrEnum):
    EULER = "euler"
    HEUN = "heun"


@dataclass(frozen=True, eq=False)
class SolverConfig:
    graph: Graph
    metric: MetricKind
    N: int
    hamiltonian: HamiltonianSpec
    weight: WeightSpec
    problem: Problem
    cfl: float = 0.9
    integrator: Integrator = Integrator.HEUN
    dt_max: float | None = None
    site_budget: int | None = None
    max_snapshots: int = 4_000
    report_times: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not 0.0 < self.cfl <= 1.0:
            raise DomainError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.N < 2:
            raise DomainError(f"N must be at least 2, got {self.N}")
        if self.max_snapshots < 1:
            raise DomainError("max_snapshots must be positive")
        if self.dt_max is not None and not self.dt_max > 0.0:
            raise DomainError("dt_max must be positive")

    @property
    def T(self) -> float:
        return self.problem.T

    @property
    def h(self) -> float:
        return 1.0 / self.N

    def with_N(self, N: int) -> SolverConfig:
        return replace(self, N=N)

    def with_r0(self, r0: float) -> SolverConfig:
        return replace(self, hamiltonian=self.hamiltonian.with_r0(r0))


@dataclass(frozen=True, eq=False)
class DiffPair:
    """[D+u] and [D-u]: sqrt(omega) * one-sided quotients, shape (sites, edges)."""

    forward: FloatArray
    backward: FloatArray


@dataclass(frozen=True, eq=False)
class Stencil:
    """Neighbor tables of a lattice restricted to the graph edges."""

    lattice: Lattice
    fwd: IndexArray
    bwd: IndexArray
    scale: FloatArray

    @classmethod
    def build(cls, lattice: Lattice, graph: Graph) -> Stencil:
        fwd, bwd = lattice.neighbor_tables(graph)
        return cls(lattice, fwd, bwd, graph.sqrt_omega / lattice.h)

    @property
    def n_edges(self) -> int:
        return int(self.fwd.shape[1])

    @property
    def has_fwd(self) -> npt.NDArray[np.bool_]:
        return self.fwd != NO_SITE

    @property
    def has_bwd(self) -> npt.NDArray[np.bool_]:
        return self.bwd != NO_SITE

    def forward_diff(self, values: FloatArray) -> FloatArray:
        """u(x + h m) - u(x), constant extrapolation."""
        exists = self.has_fwd
        shifted = values[np.where(exists, self.fwd, 0)]
        return np.where(exists, shifted - values[:, None], 0.0)

    def backward_diff(self, values: FloatArray) -> FloatArray:
        """u(x) - u(x - h m), constant extrapolation."""
        exists = self.has_bwd
        shifted = values[np.where(exists, self.bwd, 0)]
        return np.where(exists, values[:, None] - shifted, 0.0)

    def take_fwd(self, flux: FloatArray) -> FloatArray:
        """flux(x + h m) per edge, zero extension."""
        exists = self.has_fwd
        cols = np.arange(self.n_edges)
        return np.where(exists, flux[np.where(exists, self.fwd, 0), cols], 0.0)

    def take_bwd(self, flux: FloatArray) -> FloatArray:
        """flux(x - h m) per edge, zero extension."""
        exists = self.has_bwd
        cols = np.arange(self.n_edges)
        return np.where(exists, flux[np.where(exists, self.bwd, 0), cols], 0.0)

    def forward_diff_zero(self, flux: FloatArray) -> FloatArray:
        return self.take_fwd(flux) - flux

    def backward_diff_zero(self, flux: FloatArray) -> FloatArray:
        return flux - self.take_bwd(flux)


@dataclass(frozen=True, eq=False)
class LinearizedCoeffs:
    """A = dG/dp and B = dG/dq frozen at one time level, shape (sites, edges)."""

    stencil: Stencil
    A: FloatArray
    B: FloatArray

    @property
    def lattice(self) -> Lattice:
        return self.stencil.lattice

    def speeds(self) -> FloatArray:
        """sum over edges of sqrt(omega) (|A| + |B|) per site."""
        sqrt_omega = self.stencil.scale * self.lattice.h
        return np.asarray(
            np.sum(sqrt_omega * (np.abs(self.A) + np.abs(self.B)), axis=1),
            dtype=np.float64,
        )


@dataclass
class DiagnosticsTimeline:
    times: list[float] = field(default_factory=list)
    m1: list[float] = field(default_factory=list)
    m2: list[float] = field(default_factory=list)
    linf: list[float] = field(default_factory=list)
    dt: list[float] = field(default_factory=list)
    gradient_sup: list[float] = field(default_factory=list)

    def record(
        self, t: float, m1: float, m2: float, linf: float, dt: float, gradient_sup: float
    ) -> None:
        self.times.append(t)
        self.m1.append(m1)
        self.m2.append(m2)
        self.linf.append(linf)
        self.dt.append(dt)
        self.gradient_sup.append(gradient_sup)

    def __len__(self) -> int:
        return len(self.times)

    def table(self) -> FloatArray:
        """Columns t, m1, m2, linf, dt."""
        return np.column_stack([self.times, self.m1, self.m2, self.linf, self.dt])


@dataclass
class Remainders:
    plus: FloatArray
    minus: FloatArray
    l1: float
    weighted_l1: float | None = None


@dataclass
class Solution:
    final: Field
    timeline: DiagnosticsTimeline
    snapshots: dict[float, Field]
    trajectory: CoefficientTrajectory | None = None


class SemiDiscreteScheme:
    def __init__(self, config: SolverConfig, lattice: Lattice | None = None) -> None:
        self.config = config
        self.lattice = lattice or Lattice.build(
            config.graph.d, config.N, config.site_budget
        )
        if self.lattice.N != config.N or self.lattice.d != config.graph.d:
            raise DomainError("lattice does not match the solver configuration")
        self.stencil = Stencil.build(self.lattice, config.graph)
        self.coefficients = hamiltonian_coefficients(
            config.graph, config.metric, self.lattice.xi
        )
        self.potential = config.problem.potential_values(self.lattice.xi)
        self.interior_h = self.stencil.has_fwd & self.stencil.has_bwd

    @property
    def h(self) -> float:
        return self.lattice.h

    @property
    def dt_max(self) -> float:
        return self.h if self.config.dt_max is None else self.config.dt_max

    def linf_bound(self, t: float) -> float:
        """||U0||_inf + t ||F||_inf."""
        u0 = self.config.problem.initial_values(self.lattice.xi)
        return float(np.max(np.abs(u0)) + t * np.max(np.abs(self.potential)))

    def _values(self, u: Field | FloatArray) -> FloatArray:
        if isinstance(u, Field):
            if u.lattice.n_sites != self.lattice.n_sites:
                raise DomainError("field does not live on this lattice")
            return u.values
        return np.asarray(u, dtype=np.float64)

    def diff_matrices(self, u: Field | FloatArray) -> DiffPair:
        values = self._values(u)
        scale = self.stencil.scale
        return DiffPair(
            forward=scale * self.stencil.forward_diff(values),
            backward=scale * self.stencil.backward_diff(values),
        )

    def hamiltonian(self, u: Field | FloatArray) -> FloatArray:
        diffs = self.diff_matrices(u)
        spec = self.config.hamiltonian
        edge_terms = spec.edge_values(self.coefficients, diffs.forward, diffs.backward)
        return np.asarray(np.sum(edge_terms, axis=1), dtype=np.float64)

    def rhs_values(self, values: FloatArray) -> FloatArray:
        return -self.hamiltonian(values) - self.potential

    def rhs(self, u: Field) -> Field:
        return Field(self.lattice, self.rhs_values(self._values(u)))

    def partials(self, u: Field | FloatArray) -> LinearizedCoeffs:
        diffs = self.diff_matrices(u)
        spec = self.config.hamiltonian
        a = self.coefficients
        return LinearizedCoeffs(
            self.stencil,
            spec.partial_p(a, diffs.forward, diffs.backward),
            spec.partial_q(a, diffs.forward, diffs.backward),
        )

    def max_speed(self, u: Field | FloatArray) -> float:
        return float(np.max(self.partials(u).speeds()))

    def cfl_dt(self, u: Field | FloatArray) -> float:
        s_max = max(self.max_speed(u), SPEED_FLOOR)
        return min(self.config.cfl * self.h / s_max, self.dt_max)

    def step(self, u: Field, dt: float) -> Field:
        values = self._values(u)
        k1 = self.rhs_values(values)
        if self.config.integrator is Integrator.EULER:
            return Field(self.lattice, values + dt * k1)
        stage = values + dt * k1
        k2 = self.rhs_values(stage)
        return Field(self.lattice, values + 0.5 * dt * (k1 + k2))

    def diagnostics(self, u: Field | FloatArray) -> tuple[float, float]:
        """(m1, m2): sup of |D+-u|/h and max second difference along edge directions."""
        values = self._values(u)
        fwd = self.stencil.forward_diff(values)
        bwd = self.stencil.backward_diff(values)
        m1 = max(float(np.max(np.abs(fwd))), float(np.max(np.abs(bwd)))) / self.h
        if not np.any(self.interior_h):
            return m1, 0.0
        # |e_ij|^2 = 2
        second = (fwd - bwd)[self.interior_h] / (2.0 * self.h * self.h)
        return m1, float(np.max(second))

    def gradient_sup(self, u: Field | FloatArray) -> float:
        diffs = self.diff_matrices(u)
        return max(
            float(np.max(np.abs(diffs.forward))), float(np.max(np.abs(diffs.backward)))
        )

    def gradient_proxy(self, u: Field | FloatArray) -> FloatArray:
        """Central differences along each edge, one-sided next to missing neighbors."""
        values = self._values(u)
        fwd = self.stencil.forward_diff(values)
        bwd = self.stencil.backward_diff(values)
        has_fwd, has_bwd = self.stencil.has_fwd, self.stencil.has_bwd
        both = has_fwd & has_bwd
        proxy = np.zeros_like(fwd)
        proxy[both] = (fwd[both] + bwd[both]) / (2.0 * self.h)
        only_fwd = has_fwd & ~has_bwd
        proxy[only_fwd] = fwd[only_fwd] / self.h
        only_bwd = has_bwd & ~has_fwd
        proxy[only_bwd] = bwd[only_bwd] / self.h
        return proxy

    def remainders(
        self, u: Field | FloatArray, weight: Field | None = None
    ) -> Remainders:
        values = self._values(u)
        proxy = self.gradient_proxy(values)
        plus = np.where(
            self.stencil.has_fwd,
            self.stencil.take_fwd(proxy) - self.stencil.forward_diff(values) / self.h,
            0.0,
        )
        minus = np.where(
            self.stencil.has_bwd,
            self.stencil.take_bwd(proxy) - self.stencil.backward_diff(values) / self.h,
            0.0,
        )
        per_site = np.sum(np.abs(plus) + np.abs(minus), axis=1)
        volume = self.lattice.cell_volume
        weighted = None
        if weight is not None:
            weighted = lattice_sum(per_site * weight.values) * volume
        return Remainders(plus, minus, lattice_sum(per_site) * volume, weighted)

    def _record(
        self, timeline: DiagnosticsTimeline, t: float, values: FloatArray, dt: float
    ) -> None:
        m1, m2 = self.diagnostics(values)
        timeline.record(
            t, m1, m2, float(np.max(np.abs(values))), dt, self.gradient_sup(values)
        )

    def _landing_times(self) -> list[float]:
        T = self.config.T
        marks = sorted({t for t in self.config.report_times if 0.0 < t < T})
        return [*marks, T]

    def solve(
        self,
        record_coefficients: bool = False,
        on_step: Callable[[int, float, Field], None] | None = None,
    ) -> Solution:
        config = self.config
        T = config.T
        u = config.problem.initial_field(self.lattice)
        timeline = DiagnosticsTimeline()
        self._record(timeline, 0.0, u.values, 0.0)
        snapshots: dict[float, Field] = {}
        trajectory = (
            CoefficientTrajectory(self, u.values.copy()) if record_coefficients else None
        )

        logger.info(
            "solving d=%d N=%d %s/%s %s to T=%g",
            config.graph.d,
            config.N,
            config.hamiltonian.scheme,
            config.metric,
            config.integrator,
            T,
        )
        t = 0.0
        n = 0
        for landing in self._landing_times():
            while t < landing:
                coeffs = self.partials(u)
                s_max = max(float(np.max(coeffs.speeds())), SPEED_FLOOR)
                dt = min(config.cfl * self.h / s_max, self.dt_max)
                if t + dt >= landing - LANDING_TOL * T:
                    dt = landing - t
                if trajectory is not None:
                    trajectory.push(n, dt, coeffs)
                u = self.step(u, dt)
                n += 1
                t = landing if dt == landing - t else t + dt
                if not np.all(np.isfinite(u.values)):
                    raise DivergenceError(
                        f"non-finite field after step {n} at t={t:.6g}", step=n
                    )
                self._record(timeline, t, u.values, dt)
                if trajectory is not None:
                    trajectory.mark(n, t, u.values)
                if on_step is not None:
                    on_step(n, t, u)
                logger.debug("step %d t=%.6g dt=%.3g", n, t, dt)
            if landing < T:
                snapshots[landing] = Field(self.lattice, u.values.copy())

        snapshots[T] = u
        if trajectory is not None:
            trajectory.finish()
        logger.info("reached T=%g in %d steps", T, n)
        return Solution(u, timeline, snapshots, trajectory)


class CoefficientTrajectory:
    """Per-step linearized coefficients of a solved trajectory.

    Levels are grouped into segments of ``max_snapshots`` steps. Only the field
    at each segment start is kept; a segment's coefficients are regenerated by
    re-stepping from it with the recorded step sizes. The most recently
    generated segment stays cached.
    """

    def __init__(self, scheme: SemiDiscreteScheme, u0: FloatArray) -> None:
        self.scheme = scheme
        self.segment = scheme.config.max_snapshots
        self.times: list[float] = [0.0]
        self.dts: list[float] = []
        self.checkpoints: dict[int, FloatArray] = {0: u0}
        self._cache_start = 0
        self._cache: list[LinearizedCoeffs] = []

    @property
    def n_steps(self) -> int:
        return len(self.dts)

    @property
    def lattice(self) -> Lattice:
        return self.scheme.lattice

    def push(self, n: int, dt: float, coeffs: LinearizedCoeffs) -> None:
        if n % self.segment == 0:
            self._cache_start = n
            self._cache = []
        self._cache.append(coeffs)
        self.dts.append(dt)

    def mark(self, n: int, t: float, values: FloatArray) -> None:
        self.times.append(t)
        if n % self.segment == 0:
            self.checkpoints[n] = values.copy()

    def finish(self) -> None:
        logger.debug(
            "trajectory: %d steps in %d segments", self.n_steps, len(self.segments())
        )

    def segments(self) -> list[tuple[int, int]]:
        return [
            (start, min(start + self.segment, self.n_steps))
            for start in range(0, self.n_steps, self.segment)
        ]

    def _segment(self, start: int, stop: int) -> list[LinearizedCoeffs]:
        if start == self._cache_start and len(self._cache) == stop - start:
            return self._cache
        u = Field(self.lattice, self.checkpoints[start].copy())
        coeffs: list[LinearizedCoeffs] = []
        for n in range(start, stop):
            coeffs.append(self.scheme.partials(u))
            u = self.scheme.step(u, self.dts[n])
        self._cache_start, self._cache = start, coeffs
        return coeffs

    def coefficients(self, n: int) -> LinearizedCoeffs:
        start = (n // self.segment) * self.segment
        stop = min(start + self.segment, self.n_steps)
        return self._segment(start, stop)[n - start]

    def forward(self) -> Iterator[tuple[int, float, LinearizedCoeffs]]:
        for start, stop in self.segments():
            levels = self._segment(start, stop)
            for n in range(start, stop):
                yield n, self.dts[n], levels[n - start]

    def backward(self) -> Iterator[tuple[int, float, LinearizedCoeffs]]:
        for start, stop in reversed(self.segments()):
            levels = self._segment(start, stop)
            for n in reversed(range(start, stop)):
                yield n, self.dts[n], levels[n - start]


def calibrate_r0(config: SolverConfig) -> SolverConfig:
    """Two-pass R0: a preliminary solve sized from U0, then R0 from its observed
    sup of [D+-u] with a safety factor."""
    scheme = SemiDiscreteScheme(config)
    u0 = config.problem.initial_field(scheme.lattice)
    provisional = R0_SAFETY * max(scheme.gradient_sup(u0), R0_FLOOR)
    trial = SemiDiscreteScheme(config.with_r0(provisional), scheme.lattice)
    observed = max(trial.solve().timeline.gradient_sup)
    r0 = R0_SAFETY * max(observed, R0_FLOOR)
    logger.info(
        "calibrated R0=%.6g (provisional %.6g, observed sup %.6g)",
        r0,
        provisional,
        observed,
    )
    return config.with_r0(r0)


def solve(config: SolverConfig) -> tuple[Field, DiagnosticsTimeline]:
    solution = SemiDiscreteScheme(config).solve()
    return solution.final, solution.timeline

