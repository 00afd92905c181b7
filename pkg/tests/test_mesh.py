import math
from pathlib import Path

import numpy as np
import pytest

from hjgraph.core.graph import Graph
from hjgraph.core.mesh import (
    NO_SITE,
    Field,
    Lattice,
    Region,
    classify,
    lattice_sum,
    nearest_site,
    pi_forward,
    pi_inverse,
    shift,
    stencil,
    weighted_l1,
    write_field_csv,
)
from hjgraph.exceptions import DomainError, LatticeMismatchError, SiteBudgetError


@pytest.mark.parametrize(("d", "N"), [(2, 4), (3, 4), (3, 6), (4, 5)])
def test_site_count(d: int, N: int) -> None:
    assert Lattice.build(d, N).n_sites == math.comb(N + d - 1, d - 1)


def test_sites_lie_on_the_simplex(lattice_d3: Lattice) -> None:
    np.testing.assert_allclose(lattice_d3.xi.sum(axis=1), 1.0, atol=1e-15)
    assert np.all(lattice_d3.xi >= 0.0)
    assert np.all(np.diff(lattice_d3.coords, axis=1) >= 0)


def test_pi_roundtrip_on_a_point() -> None:
    xi = np.array([0.2, 0.3, 0.5])
    s = pi_forward(xi)
    np.testing.assert_allclose(s, [0.2, 0.5])
    np.testing.assert_allclose(pi_inverse(s), xi)


def test_stencil_marks_cumulative_coordinates() -> None:
    np.testing.assert_array_equal(stencil(4, (1, 3)), [0, 1, 1])
    np.testing.assert_array_equal(stencil(3, (0, 2)), [1, 1])
    np.testing.assert_array_equal(stencil(2, (0, 1)), [1])


def test_shift_moves_mass_between_endpoints(lattice_d3: Lattice) -> None:
    site = lattice_d3.locate([1 / 3, 1 / 3, 1 / 3])
    moved = shift(lattice_d3, site, (0, 2), 1)
    assert moved is not None
    np.testing.assert_allclose(
        lattice_d3.xi[moved], [1 / 3 + 1 / 6, 1 / 3, 1 / 3 - 1 / 6], atol=1e-15
    )


def test_shift_leaves_the_lattice_at_the_boundary(lattice_d2: Lattice) -> None:
    top = lattice_d2.locate([1.0, 0.0])
    bottom = lattice_d2.locate([0.0, 1.0])
    assert shift(lattice_d2, top, (0, 1), 1) is None
    assert shift(lattice_d2, bottom, (0, 1), -1) is None
    assert shift(lattice_d2, bottom, (0, 1), 1) == bottom + 1


def test_neighbors_validate_arguments(lattice_d2: Lattice) -> None:
    with pytest.raises(DomainError):
        lattice_d2.neighbors((1, 0), 1)
    with pytest.raises(DomainError):
        lattice_d2.neighbors((0, 1), 2)


def test_classify_on_a_segment(lattice_d2: Lattice) -> None:
    edge = (0, 1)
    assert classify(lattice_d2, 0, edge) is Region.BOUNDARY_LAYER
    assert classify(lattice_d2, 1, edge) is Region.INTERIOR_H
    assert classify(lattice_d2, 2, edge) is Region.INTERIOR_2H
    assert classify(lattice_d2, 4, edge) is Region.INTERIOR_3H
    assert classify(lattice_d2, 8, edge) is Region.BOUNDARY_LAYER


def test_region_levels_agree_with_classify(lattice_d3: Lattice, triangle: Graph) -> None:
    levels = lattice_d3.region_levels(triangle)
    for site in range(lattice_d3.n_sites):
        for k, edge in enumerate(triangle.edges):
            assert levels[site, k] == classify(lattice_d3, site, edge)


def test_locate_and_lookup(lattice_d2: Lattice) -> None:
    assert lattice_d2.locate([0.25, 0.75]) == 2
    with pytest.raises(DomainError):
        lattice_d2.locate([0.3, 0.7])
    found = lattice_d2.lookup(np.array([[0], [8], [9], [-1]]))
    np.testing.assert_array_equal(found, [0, 8, NO_SITE, NO_SITE])


def test_site_budget_is_enforced() -> None:
    with pytest.raises(SiteBudgetError):
        Lattice.build(3, 64, site_budget=100)


@pytest.mark.parametrize(("d", "N"), [(1, 4), (2, 1)])
def test_degenerate_lattices_are_rejected(d: int, N: int) -> None:
    with pytest.raises(DomainError):
        Lattice.build(d, N)


def test_nearest_site_prefers_interior(lattice_d3: Lattice) -> None:
    center = nearest_site(lattice_d3, [1 / 3, 1 / 3, 1 / 3])
    np.testing.assert_allclose(lattice_d3.xi[center], [1 / 3, 1 / 3, 1 / 3])
    corner = nearest_site(lattice_d3, [1.0, 0.0, 0.0])
    assert not lattice_d3.on_boundary[corner]
    assert lattice_d3.on_boundary[nearest_site(lattice_d3, [1.0, 0.0, 0.0], interior=False)]


def test_nearest_site_without_interior() -> None:
    with pytest.raises(DomainError):
        nearest_site(Lattice.build(3, 2), [1 / 3, 1 / 3, 1 / 3])


def test_field_shape_and_lattice_checks(lattice_d2: Lattice) -> None:
    with pytest.raises(LatticeMismatchError):
        Field(lattice_d2, np.zeros(3))
    other = Field.zeros(Lattice.build(2, 4))
    with pytest.raises(LatticeMismatchError):
        Field.zeros(lattice_d2).same_lattice(other)


def test_weighted_l1(lattice_d2: Lattice) -> None:
    values = np.linspace(-1.0, 1.0, lattice_d2.n_sites)
    weight = Field(lattice_d2, np.full(lattice_d2.n_sites, 2.0))
    expected = lattice_sum(np.abs(values) * 2.0) * lattice_d2.h
    assert weighted_l1(Field(lattice_d2, values), weight) == pytest.approx(expected)


def test_write_field_csv(tmp_path: Path, lattice_d3: Lattice) -> None:
    path = tmp_path / "field.csv"
    write_field_csv(path, Field(lattice_d3, lattice_d3.xi[:, 0]))
    lines = path.read_text().splitlines()
    assert lines[0] == "site_id,s_1,s_2,xi_1,xi_2,xi_3,value"
    assert len(lines) == lattice_d3.n_sites + 1
    first = lines[1].split(",")
    assert first[0] == "0"
    assert float(first[-1]) == pytest.approx(lattice_d3.xi[0, 0])


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("N", [2, 5, 16])
def test_shift_is_closed_on_every_lattice(d: int, N: int) -> None:
    lattice = Lattice.build(d, N)
    for edge in lattice.pairs:
        for sign in (1, -1):
            moved = lattice.coords + sign * stencil(d, edge)
            inside = np.all((moved >= 0) & (moved <= N), axis=1)
            inside &= np.all(np.diff(moved, axis=1) >= 0, axis=1)
            found = lattice.neighbors(edge, sign)
            np.testing.assert_array_equal(found != NO_SITE, inside)
            np.testing.assert_array_equal(lattice.coords[found[inside]], moved[inside])


def test_pi_roundtrip_on_random_points() -> None:
    rng = np.random.default_rng(12)
    for xi in rng.dirichlet(np.ones(4), size=1_000):
        s = pi_forward(xi)
        assert np.all(np.diff(s) >= 0.0)
        np.testing.assert_allclose(pi_inverse(s), xi, rtol=0, atol=1e-14)


def test_weighted_l1_is_a_norm(lattice_d3: Lattice) -> None:
    rng = np.random.default_rng(13)
    weight = Field(lattice_d3, rng.uniform(0.0, 1.0, lattice_d3.n_sites))
    for _ in range(20):
        f = Field(lattice_d3, rng.standard_normal(lattice_d3.n_sites))
        g = Field(lattice_d3, rng.standard_normal(lattice_d3.n_sites))
        norm_f = weighted_l1(f, weight)
        for lam in (-3.0, 0.5, 2.0):
            scaled = weighted_l1(Field(lattice_d3, lam * f.values), weight)
            assert scaled == pytest.approx(abs(lam) * norm_f, rel=1e-12)
        total = weighted_l1(Field(lattice_d3, f.values + g.values), weight)
        assert total <= norm_f + weighted_l1(g, weight) + 1e-12
