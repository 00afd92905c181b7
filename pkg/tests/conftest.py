from collections.abc import Callable
from pathlib import Path

import pytest
import yaml
from typer.testing import CliRunner

from hjgraph.core.graph import Graph, MetricKind
from hjgraph.core.hamiltonians import HamiltonianSpec, SchemeKind
from hjgraph.core.mesh import Lattice
from hjgraph.core.problems import InitialDatum, Potential, Problem
from hjgraph.core.scheme import Integrator, SolverConfig
from hjgraph.core.weights import WeightSpec

SolverFactory = Callable[..., SolverConfig]


@pytest.fixture
def two_node() -> Graph:
    return Graph.two_node()


@pytest.fixture
def triangle() -> Graph:
    return Graph.complete(3)


@pytest.fixture
def lattice_d2() -> Lattice:
    return Lattice.build(2, 8)


@pytest.fixture
def lattice_d3() -> Lattice:
    return Lattice.build(3, 6)


@pytest.fixture
def make_config() -> SolverFactory:
    def factory(
        graph: Graph | None = None,
        N: int = 8,
        scheme: SchemeKind = SchemeKind.LAX_FRIEDRICHS,
        r0: float = 2.0,
        gamma: float | None = None,
        metric: MetricKind = MetricKind.AVERAGE,
        u0: InitialDatum = InitialDatum.QUADRATIC,
        F: Potential = Potential.ZERO,
        F_coefficients: tuple[float, ...] | None = None,
        T: float = 0.25,
        integrator: Integrator = Integrator.HEUN,
        weight: WeightSpec | None = None,
        **kwargs: object,
    ) -> SolverConfig:
        return SolverConfig(
            graph=graph or Graph.two_node(),
            metric=metric,
            N=N,
            hamiltonian=HamiltonianSpec(scheme, r0, gamma),
            weight=weight or WeightSpec(),
            problem=Problem(u0=u0, F=F, T=T, F_coefficients=F_coefficients),
            integrator=integrator,
            **kwargs,  # type: ignore[arg-type]
        )

    return factory


@pytest.fixture
def runner() -> CliRunner:
    return CliRunner()


@pytest.fixture
def write_run(tmp_path: Path) -> Callable[[dict], Path]:
    """Dump a run document into tmp_path and return its path."""

    def write(document: dict) -> Path:
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump(document), encoding="utf-8")
        return path

    return write
