import numpy as np
import pytest

from hjgraph.core.graph import Graph
from hjgraph.core.hamiltonians import SchemeKind
from hjgraph.core.mesh import Field
from hjgraph.core.problems import InitialDatum, Potential
from hjgraph.core.scheme import (
    R0_SAFETY,
    Integrator,
    SemiDiscreteScheme,
    calibrate_r0,
    solve,
)
from hjgraph.core.weights import WeightSpec, weight_field
from hjgraph.exceptions import DivergenceError, DomainError
from tests.conftest import SolverFactory


def test_solver_config_validation(make_config: SolverFactory) -> None:
    with pytest.raises(DomainError):
        make_config(cfl=1.5)
    with pytest.raises(DomainError):
        make_config(max_snapshots=0)
    config = make_config(N=8)
    assert config.with_N(16).N == 16
    assert config.with_r0(3.0).hamiltonian.viscosity == 6.0


def test_differences_of_a_linear_field(make_config: SolverFactory) -> None:
    scheme = SemiDiscreteScheme(make_config(N=8, u0=InitialDatum.LINEAR))
    u = scheme.config.problem.initial_field(scheme.lattice)
    diffs = scheme.diff_matrices(u)
    np.testing.assert_allclose(diffs.forward[:-1, 0], 1.0, rtol=1e-12)
    np.testing.assert_allclose(diffs.backward[1:, 0], 1.0, rtol=1e-12)
    # constant extrapolation where the shift leaves the simplex
    assert diffs.forward[-1, 0] == 0.0
    assert diffs.backward[0, 0] == 0.0


def test_rhs_by_hand(make_config: SolverFactory) -> None:
    scheme = SemiDiscreteScheme(make_config(N=4, r0=2.0))
    u = scheme.config.problem.initial_field(scheme.lattice)
    P, Q, a, gamma = 1.25, 0.75, 1.0 / 32.0, 4.0
    expected = -a * (0.5 * (P * P + Q * Q) - gamma * (P - Q))
    assert scheme.rhs(u).values[2] == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(0.029296875)


def test_rhs_of_a_constant_field_is_minus_the_potential(make_config: SolverFactory) -> None:
    config = make_config(
        u0=InitialDatum.CONSTANT, F=Potential.LINEAR, F_coefficients=(0.5, 0.5)
    )
    scheme = SemiDiscreteScheme(config)
    u = config.problem.initial_field(scheme.lattice)
    np.testing.assert_allclose(scheme.rhs(u).values, -0.5)


@pytest.mark.parametrize("scheme_kind", list(SchemeKind))
@pytest.mark.parametrize("integrator", list(Integrator))
def test_constant_data_is_stationary(
    make_config: SolverFactory, scheme_kind: SchemeKind, integrator: Integrator
) -> None:
    config = make_config(
        graph=Graph.complete(3),
        u0=InitialDatum.CONSTANT,
        scheme=scheme_kind,
        integrator=integrator,
    )
    final, timeline = solve(config)
    np.testing.assert_array_equal(final.values, 1.0)
    assert timeline.times[-1] == config.T


def test_cfl_step_scales_with_the_cfl_number(make_config: SolverFactory) -> None:
    config = make_config(N=4, u0=InitialDatum.CONSTANT, dt_max=10.0)
    u = config.problem.initial_field(SemiDiscreteScheme(config).lattice)
    assert SemiDiscreteScheme(config).cfl_dt(u) == pytest.approx(0.9)
    half = make_config(N=4, u0=InitialDatum.CONSTANT, dt_max=10.0, cfl=0.45)
    assert SemiDiscreteScheme(half).cfl_dt(u) == pytest.approx(0.45)


def test_zero_speed_falls_back_to_dt_max(make_config: SolverFactory) -> None:
    config = make_config(N=4, u0=InitialDatum.CONSTANT, scheme=SchemeKind.OSHER_SETHIAN)
    scheme = SemiDiscreteScheme(config)
    u = config.problem.initial_field(scheme.lattice)
    assert scheme.max_speed(u) == 0.0
    assert scheme.cfl_dt(u) == scheme.h


@pytest.mark.parametrize("scheme_kind", list(SchemeKind))
def test_linf_stays_below_the_a_priori_bound(
    make_config: SolverFactory, scheme_kind: SchemeKind
) -> None:
    config = make_config(
        graph=Graph.complete(3), N=12, scheme=scheme_kind, F=Potential.QUADRATIC, T=0.3
    )
    scheme = SemiDiscreteScheme(config)
    timeline = scheme.solve().timeline
    for t, linf in zip(timeline.times, timeline.linf):
        assert linf <= scheme.linf_bound(t) + 1e-10


def test_euler_step(make_config: SolverFactory) -> None:
    scheme = SemiDiscreteScheme(make_config(integrator=Integrator.EULER))
    u = scheme.config.problem.initial_field(scheme.lattice)
    stepped = scheme.step(u, 0.01)
    np.testing.assert_allclose(stepped.values, u.values + 0.01 * scheme.rhs(u).values)


def test_step_commutes_with_constants(make_config: SolverFactory) -> None:
    scheme = SemiDiscreteScheme(make_config(graph=Graph.complete(3), N=8))
    u = scheme.config.problem.initial_field(scheme.lattice)
    shifted = Field(scheme.lattice, u.values + 0.3)
    dt = scheme.cfl_dt(u)
    np.testing.assert_allclose(
        scheme.step(shifted, dt).values, scheme.step(u, dt).values + 0.3, atol=1e-12
    )


@pytest.mark.parametrize("scheme_kind", list(SchemeKind))
def test_euler_step_is_monotone(make_config: SolverFactory, scheme_kind: SchemeKind) -> None:
    config = make_config(
        graph=Graph.complete(3), N=8, scheme=scheme_kind, integrator=Integrator.EULER
    )
    scheme = SemiDiscreteScheme(config)
    rng = np.random.default_rng(11)
    for _ in range(20):
        base = 0.01 * rng.standard_normal(scheme.lattice.n_sites)
        u = Field(scheme.lattice, base)
        v = Field(scheme.lattice, base + 0.005 * rng.uniform(0.0, 1.0, base.size))
        dt = 0.5 * min(scheme.cfl_dt(u), scheme.cfl_dt(v))
        assert np.all(scheme.step(u, dt).values <= scheme.step(v, dt).values + 1e-12)


def test_diagnostics(make_config: SolverFactory) -> None:
    scheme = SemiDiscreteScheme(make_config(N=16))
    xi = scheme.lattice.xi
    assert scheme.diagnostics(np.ones(scheme.lattice.n_sites)) == (0.0, 0.0)
    m1, m2 = scheme.diagnostics(xi[:, 0])
    assert m1 == pytest.approx(1.0)
    assert m2 == pytest.approx(0.0, abs=1e-9)
    m1, m2 = scheme.diagnostics(xi[:, 0] ** 2)
    assert m1 == pytest.approx(2.0 - scheme.h)
    assert m2 == pytest.approx(1.0)


def test_remainders_of_a_linear_field(make_config: SolverFactory) -> None:
    scheme = SemiDiscreteScheme(make_config(graph=Graph.complete(3), N=8))
    rem = scheme.remainders(scheme.lattice.xi[:, 0])
    np.testing.assert_allclose(rem.plus, 0.0, atol=1e-10)
    np.testing.assert_allclose(rem.minus, 0.0, atol=1e-10)
    assert rem.l1 == pytest.approx(0.0, abs=1e-10)
    assert rem.weighted_l1 is None


def test_remainders_of_a_quadratic_are_first_order(make_config: SolverFactory) -> None:
    scheme = SemiDiscreteScheme(make_config(N=8))
    h = scheme.h
    rem = scheme.remainders(scheme.lattice.xi[:, 0] ** 2)
    np.testing.assert_allclose(rem.plus[:-1, 0][:-1], h, rtol=1e-9)
    np.testing.assert_allclose(rem.minus[2:, 0], -h, rtol=1e-9)
    assert rem.plus[-1, 0] == 0.0
    assert rem.minus[0, 0] == 0.0


def test_weighted_remainder_norm(make_config: SolverFactory) -> None:
    scheme = SemiDiscreteScheme(make_config(graph=Graph.complete(3), N=8))
    lattice = scheme.lattice
    u = lattice.xi[:, 0] ** 2
    flat = scheme.remainders(u, Field(lattice, np.full(lattice.n_sites, 2.0)))
    assert flat.weighted_l1 == pytest.approx(2.0 * flat.l1, rel=1e-12)
    weight = weight_field(WeightSpec(), lattice)
    weighted = scheme.remainders(u, weight).weighted_l1
    assert weighted is not None
    assert 0.0 < weighted <= flat.l1 * weight.sup_norm()


def test_solve_lands_on_report_times(make_config: SolverFactory) -> None:
    config = make_config(N=8, T=0.25, report_times=(0.1, 0.2))
    solution = SemiDiscreteScheme(config).solve()
    assert 0.1 in solution.timeline.times
    assert 0.2 in solution.timeline.times
    assert solution.timeline.times[-1] == 0.25
    assert sorted(solution.snapshots) == [0.1, 0.2, 0.25]
    assert solution.snapshots[0.25] is solution.final
    assert np.all(np.diff(solution.timeline.times) > 0)


def test_non_finite_fields_abort(
    make_config: SolverFactory, monkeypatch: pytest.MonkeyPatch
) -> None:
    scheme = SemiDiscreteScheme(make_config())
    monkeypatch.setattr(scheme, "rhs_values", lambda values: np.full_like(values, np.inf))
    with pytest.raises(DivergenceError) as exc_info:
        scheme.solve()
    assert exc_info.value.step == 1
    assert exc_info.value.exit_code == 2


def test_regenerated_coefficients_match_cached(make_config: SolverFactory) -> None:
    graph = Graph.complete(3)
    full = SemiDiscreteScheme(make_config(graph=graph, N=8, T=1.0)).solve(
        record_coefficients=True
    )
    chunked = SemiDiscreteScheme(
        make_config(graph=graph, N=8, T=1.0, max_snapshots=3)
    ).solve(record_coefficients=True)
    assert full.trajectory is not None and chunked.trajectory is not None
    assert chunked.trajectory.n_steps == full.trajectory.n_steps
    assert len(chunked.trajectory.segments()) > 1
    for n in range(full.trajectory.n_steps):
        np.testing.assert_array_equal(
            chunked.trajectory.coefficients(n).A, full.trajectory.coefficients(n).A
        )
        np.testing.assert_array_equal(
            chunked.trajectory.coefficients(n).B, full.trajectory.coefficients(n).B
        )
    order = [n for n, _, _ in chunked.trajectory.backward()]
    assert order == list(reversed(range(full.trajectory.n_steps)))


def test_calibrated_r0_covers_the_observed_gradients(make_config: SolverFactory) -> None:
    config = calibrate_r0(make_config(graph=Graph.complete(3), N=8, r0=1.0))
    observed = max(SemiDiscreteScheme(config).solve().timeline.gradient_sup)
    assert config.hamiltonian.r0 >= R0_SAFETY
    assert config.hamiltonian.r0 >= observed
