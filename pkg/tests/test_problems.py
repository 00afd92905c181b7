import numpy as np
import pytest

from hjgraph.core.mesh import Lattice
from hjgraph.core.problems import InitialDatum, Potential, Problem
from hjgraph.exceptions import DomainError

XIS = np.array([[0.5, 0.5], [0.25, 0.75], [1.0, 0.0]])


@pytest.mark.parametrize(
    ("u0", "expected"),
    [
        (InitialDatum.CONSTANT, [1.0, 1.0, 1.0]),
        (InitialDatum.LINEAR, [0.5, 0.25, 1.0]),
        (InitialDatum.QUADRATIC, [0.25, 0.0625, 1.0]),
        (InitialDatum.COSINE, [0.0, np.cos(np.pi / 4), -1.0]),
    ],
)
def test_initial_data(u0: InitialDatum, expected: list[float]) -> None:
    np.testing.assert_allclose(Problem(u0=u0).initial_values(XIS), expected, atol=1e-15)


def test_potentials() -> None:
    np.testing.assert_array_equal(Problem().potential_values(XIS), 0.0)
    np.testing.assert_allclose(
        Problem(F=Potential.LINEAR).potential_values(XIS), [0.75, 0.875, 0.5]
    )
    np.testing.assert_allclose(
        Problem(F=Potential.LINEAR, F_coefficients=(2.0, 2.0)).potential_values(XIS), 2.0
    )
    np.testing.assert_allclose(
        Problem(F=Potential.QUADRATIC).potential_values(XIS), [0.5, 0.625, 1.0]
    )


def test_linear_potential_needs_one_coefficient_per_vertex() -> None:
    with pytest.raises(DomainError):
        Problem(F=Potential.LINEAR, F_coefficients=(1.0,)).potential_values(XIS)


def test_final_time_must_be_positive() -> None:
    with pytest.raises(DomainError):
        Problem(T=0.0)


def test_fields_live_on_the_lattice() -> None:
    lattice = Lattice.build(3, 4)
    field = Problem().initial_field(lattice)
    assert field.lattice is lattice
    np.testing.assert_allclose(field.values, lattice.xi[:, 0] ** 2)
