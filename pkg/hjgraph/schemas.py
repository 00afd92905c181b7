from pathlib import Path
from typing import Any, Literal

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from hjgraph.config import LocalSettings, get_settings
from hjgraph.core.graph import Graph, MetricKind, is_in_simplex
from hjgraph.core.hamiltonians import HamiltonianSpec, SchemeKind
from hjgraph.core.problems import InitialDatum, Potential, Problem
from hjgraph.core.scheme import R0_FLOOR, Integrator, SolverConfig, calibrate_r0
from hjgraph.core.weights import WeightKind, WeightSpec
from hjgraph.exceptions import ConfigError, DomainError


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class GraphSection(Section):
    d: int = Field(default=2, ge=2)
    # None means the complete graph with unit weights
    omega: list[list[float]] | None = None


class MetricSection(Section):
    kind: MetricKind = MetricKind.AVERAGE


class LatticeSection(Section):
    N: int = Field(default=32, ge=2)


class SchemeSection(Section):
    kind: SchemeKind = SchemeKind.LAX_FRIEDRICHS
    r0: float | Literal["auto"] = "auto"
    gamma: float | None = Field(default=None, gt=0)
    cfl: float = Field(default=0.9, gt=0, le=1)
    integrator: Integrator = Integrator.HEUN

    @model_validator(mode="after")
    def check_r0(self) -> "SchemeSection":
        if self.r0 != "auto" and not float(self.r0) > 0:
            raise ValueError("r0 must be positive or 'auto'")
        return self


class WeightSection(Section):
    kind: WeightKind = WeightKind.POLYNOMIAL
    alpha: float = Field(default=1.0, ge=1)
    lam: float = Field(default=1.0, gt=0, alias="lambda")


class ProblemSection(Section):
    u0: InitialDatum = InitialDatum.QUADRATIC
    F: Potential = Potential.ZERO
    F_coefficients: list[float] | None = None
    T: float = Field(default=0.5, gt=0)


class RunSection(Section):
    N_list: list[int] = Field(default=[8, 16, 32, 64, 128], min_length=2)
    dirac_site: list[float] | None = None
    output_dir: str | None = None
    seed: int = 0
    site_budget: int | None = Field(default=None, gt=0)
    max_snapshots: int | None = Field(default=None, gt=0)
    dt_max: float | None = Field(default=None, gt=0)
    report_times: list[float] = []
    threads: int | None = Field(default=None, ge=1)
    audit_samples: int = Field(default=1_000, gt=0)
    terminal: Literal["dirac", "uniform"] = "dirac"


class RunConfig(Section):
    graph: GraphSection = GraphSection()
    metric: MetricSection = MetricSection()
    lattice: LatticeSection = LatticeSection()
    scheme: SchemeSection = SchemeSection()
    weight: WeightSection = WeightSection()
    problem: ProblemSection = ProblemSection()
    run: RunSection = RunSection()

    model_config = {
        "extra": "forbid",
        "json_schema_extra": {
            "example": {
                "graph": {"d": 2},
                "lattice": {"N": 32},
                "scheme": {"kind": "lax_friedrichs", "r0": "auto"},
                "problem": {"u0": "quadratic", "F": "zero", "T": 0.5},
            }
        },
    }

    @model_validator(mode="after")
    def check_cross_sections(self) -> "RunConfig":
        d = self.graph.d
        if self.graph.omega is not None:
            omega = np.asarray(self.graph.omega, dtype=np.float64)
            if omega.shape != (d, d):
                raise ConfigError(
                    f"graph.omega must be {d}x{d}, got shape {omega.shape}",
                    key_path="graph.omega",
                )
        try:
            self.to_graph()
        except DomainError as exc:
            raise ConfigError(exc.detail, key_path="graph.omega") from exc

        if self.problem.F_coefficients is not None and len(self.problem.F_coefficients) != d:
            raise ConfigError(
                f"problem.F_coefficients needs {d} entries",
                key_path="problem.F_coefficients",
            )
        if self.run.dirac_site is not None:
            site = self.run.dirac_site
            if len(site) != d or not is_in_simplex(site, tol=1e-9):
                raise ConfigError(
                    f"run.dirac_site {site} is not a point of the {d}-simplex",
                    key_path="run.dirac_site",
                )
        for t in self.run.report_times:
            if not 0 < t <= self.problem.T:
                raise ConfigError(
                    f"report time {t} lies outside (0, T]", key_path="run.report_times"
                )
        return self

    def to_graph(self) -> Graph:
        if self.graph.omega is None:
            return Graph.complete(self.graph.d)
        return Graph.from_omega(self.graph.omega)

    def to_problem(self) -> Problem:
        coefficients = self.problem.F_coefficients
        return Problem(
            u0=self.problem.u0,
            F=self.problem.F,
            T=self.problem.T,
            F_coefficients=None if coefficients is None else tuple(coefficients),
        )

    def dirac_target(self) -> list[float]:
        if self.run.dirac_site is not None:
            return self.run.dirac_site
        return [1.0 / self.graph.d] * self.graph.d


def _key_path(loc: tuple[int | str, ...]) -> str:
    return ".".join(str(part) for part in loc)


def validate_config(data: Any) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("run document must be a mapping at the top level")
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        error = exc.errors()[0]
        key_path = _key_path(error["loc"]) or None
        raise ConfigError(
            f"{key_path or 'config'}: {error['msg']}", key_path=key_path
        ) from exc


def parse_config(path: Path | None) -> RunConfig:
    """Strict parse of a YAML (or JSON) run document; None gives the defaults."""
    if path is None:
        return RunConfig()
    if not path.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path} is not valid YAML: {exc}") from exc
    return validate_config(data)


def build_solver_config(
    config: RunConfig,
    N: int | None = None,
    settings: LocalSettings | None = None,
    calibrate: bool = True,
) -> SolverConfig:
    """Solver configuration for one lattice; an 'auto' R0 is calibrated on that lattice."""
    settings = settings or get_settings()
    scheme = config.scheme
    r0 = R0_FLOOR if scheme.r0 == "auto" else float(scheme.r0)
    solver = SolverConfig(
        graph=config.to_graph(),
        metric=config.metric.kind,
        N=config.lattice.N if N is None else N,
        hamiltonian=HamiltonianSpec(scheme.kind, r0, scheme.gamma),
        weight=WeightSpec(config.weight.kind, config.weight.alpha, config.weight.lam),
        problem=config.to_problem(),
        cfl=scheme.cfl,
        integrator=scheme.integrator,
        dt_max=config.run.dt_max,
        site_budget=config.run.site_budget or settings.SITE_BUDGET,
        max_snapshots=config.run.max_snapshots or settings.MAX_SNAPSHOTS,
        report_times=tuple(sorted(config.run.report_times)),
    )
    if scheme.r0 == "auto" and calibrate:
        solver = calibrate_r0(solver)
    return solver
