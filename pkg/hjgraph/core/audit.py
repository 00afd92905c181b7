"""Invariant suite run by the ``audit`` command."""

from __future__ import annotations

import logging

import numpy as np
from pydantic import BaseModel

from hjgraph.core.adjoint import (
    DiracTerminal,
    adjoint_backward_solve,
    decomposition_residual,
    forward_dual_solve,
    ibp_sides,
)
from hjgraph.core.hamiltonians import AssumptionAudit, audit_assumptions
from hjgraph.core.mesh import Field
from hjgraph.core.scheme import LinearizedCoeffs, SemiDiscreteScheme, SolverConfig
from hjgraph.core.weights import weight_field
from hjgraph.exceptions import CFLViolationError, NegativeMassError

logger = logging.getLogger(__name__)

IBP_TOL = 1e-12
MASS_TOL = 1e-8
LINF_TOL = 1e-10
DECOMPOSITION_TOL = 1e-12


class CheckResult(BaseModel):
    name: str
    ok: bool
    value: float
    tolerance: float
    detail: str = ""


class AuditReport(BaseModel):
    d: int
    N: int
    scheme: str
    metric: str
    assumptions: AssumptionAudit
    checks: list[CheckResult]

    @property
    def ok(self) -> bool:
        return self.assumptions.ok and all(check.ok for check in self.checks)

    @property
    def failures(self) -> list[str]:
        failed = [check.name for check in self.checks if not check.ok]
        if not self.assumptions.ok:
            failed.insert(0, "assumptions")
        return failed


def _random_coefficients(
    coeffs: LinearizedCoeffs, rng: np.random.Generator
) -> LinearizedCoeffs:
    """Random monotone-signed coefficients that vanish where the real ones do."""
    active = (coeffs.A != 0.0) | (coeffs.B != 0.0)
    A = -rng.uniform(0.0, 1.0, size=coeffs.A.shape) * active
    B = rng.uniform(0.0, 1.0, size=coeffs.B.shape) * active
    return LinearizedCoeffs(coeffs.stencil, A, B)


def run_audit(
    config: SolverConfig,
    dirac_site: int,
    samples: int = 1_000,
    pairs: int = 20,
    seed: int = 0,
) -> AuditReport:
    rng = np.random.default_rng(seed)
    scheme = SemiDiscreteScheme(config)
    lattice = scheme.lattice
    weight = weight_field(config.weight, lattice)
    checks: list[CheckResult] = []

    assumptions = audit_assumptions(
        config.hamiltonian, config.graph, config.metric, samples, seed
    )

    solution = scheme.solve(record_coefficients=True)
    trajectory = solution.trajectory
    assert trajectory is not None

    bound_gap = max(
        linf - scheme.linf_bound(t)
        for t, linf in zip(solution.timeline.times, solution.timeline.linf)
    )
    checks.append(
        CheckResult(
            name="linf_bound",
            ok=bound_gap <= LINF_TOL,
            value=bound_gap,
            tolerance=LINF_TOL,
            detail="max_t ||u(t)|| - (||U0|| + t ||F||)",
        )
    )

    level0 = trajectory.coefficients(0)
    worst_ibp = 0.0
    for coeffs in (level0, _random_coefficients(level0, rng)):
        for _ in range(pairs):
            phi = Field(lattice, rng.standard_normal(lattice.n_sites))
            sigma = Field(lattice, rng.standard_normal(lattice.n_sites))
            lhs, rhs, scale = ibp_sides(weight, coeffs, phi, sigma)
            worst_ibp = max(worst_ibp, abs(lhs - rhs) / max(scale, 1.0))
    checks.append(
        CheckResult(
            name="ibp_identity",
            ok=worst_ibp <= IBP_TOL,
            value=worst_ibp,
            tolerance=IBP_TOL,
            detail="relative residual of the weighted summation by parts",
        )
    )

    worst_split = 0.0
    for _ in range(pairs):
        sigma = Field(lattice, rng.standard_normal(lattice.n_sites))
        worst_split = max(worst_split, decomposition_residual(weight, level0, sigma))
    checks.append(
        CheckResult(
            name="drift_decomposition",
            ok=worst_split <= DECOMPOSITION_TOL,
            value=worst_split,
            tolerance=DECOMPOSITION_TOL,
            detail="conservative divergence vs plain divergence plus drift, relative",
        )
    )

    try:
        adjoint = adjoint_backward_solve(trajectory, weight, DiracTerminal(dirac_site))
        drift = adjoint.conservation.mass_drift(1.0)
        detail = f"Dirac terminal at site {dirac_site}"
    except NegativeMassError as exc:
        drift, detail = float("inf"), exc.detail
    checks.append(
        CheckResult(
            name="mass_conservation",
            ok=drift <= MASS_TOL,
            value=drift,
            tolerance=MASS_TOL,
            detail=detail,
        )
    )

    try:
        worst_range = 0.0
        for _ in range(pairs // 2 or 1):
            f = Field(lattice, rng.uniform(0.0, 1.0, lattice.n_sites))
            dual = forward_dual_solve(trajectory, f)
            worst_range = max(
                worst_range,
                float(dual.fields[-1].values.max() - f.values.max()),
                float(f.values.min() - dual.fields[-1].values.min()),
            )
        ok, detail = True, "stepwise min/max monotone"
    except CFLViolationError as exc:
        ok, detail, worst_range = False, exc.detail, float("inf")
    checks.append(
        CheckResult(
            name="max_principle",
            ok=ok,
            value=max(worst_range, 0.0),
            tolerance=0.0,
            detail=detail,
        )
    )

    report = AuditReport(
        d=config.graph.d,
        N=config.N,
        scheme=str(config.hamiltonian.scheme),
        metric=str(config.metric),
        assumptions=assumptions,
        checks=checks,
    )
    for check in checks:
        logger.info("%s: %s (%.3g)", check.name, "ok" if check.ok else "FAILED", check.value)
    return report
