"""Refinement studies against the finest grid and log-log rate fits.

Errors are measured against the restricted finest-grid solution, so an
exactly first-order error reads C(h - h_ref) rather than Ch. The gated rate
(`spacing_fit`) regresses log error on log(h - h_ref), the spacing of the
Cauchy bound; `error_fit` keeps the plain log h regression for reference.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel

from hjgraph.core.mesh import NO_SITE, Field, Lattice, weighted_l1
from hjgraph.core.scheme import SemiDiscreteScheme, Solution, SolverConfig
from hjgraph.core.weights import total_mass, weight_field
from hjgraph.exceptions import DivergenceError, DomainError, LatticeMismatchError

logger = logging.getLogger(__name__)

MIN_FIT_POINTS = 3


def restrict(fine: Field, coarse: Lattice) -> Field:
    """Sample a fine-lattice field at the sites of a nested coarse lattice."""
    lattice = fine.lattice
    if lattice.d != coarse.d:
        raise LatticeMismatchError(f"cannot restrict d={lattice.d} onto d={coarse.d}")
    if lattice.N % coarse.N != 0:
        raise LatticeMismatchError(
            f"N={coarse.N} does not divide N={lattice.N}; lattices are not nested"
        )
    ratio = lattice.N // coarse.N
    idx = lattice.lookup(coarse.coords * ratio)
    if np.any(idx == NO_SITE):
        raise LatticeMismatchError("coarse site missing from the fine lattice")
    return Field(coarse, fine.values[idx])


class RateFit(BaseModel):
    slope: float
    intercept: float
    r_squared: float


def fit_rate(h: npt.ArrayLike, e: npt.ArrayLike) -> RateFit:
    """Least squares fit of log e = slope * log h + intercept."""
    h_arr = np.asarray(h, dtype=np.float64)
    e_arr = np.asarray(e, dtype=np.float64)
    if h_arr.shape != e_arr.shape:
        raise DomainError("h and e must have the same length")
    if h_arr.size < MIN_FIT_POINTS:
        raise DomainError(
            f"rate fit needs at least {MIN_FIT_POINTS} points, got {h_arr.size}"
        )
    if np.any(h_arr <= 0.0) or np.any(e_arr <= 0.0):
        raise DomainError("rate fit needs positive h and e")

    x, y = np.log(h_arr), np.log(e_arr)
    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = float(np.sum((y - y.mean()) ** 2))
    r_squared = 1.0 if total == 0.0 else 1.0 - float(np.sum(residual**2)) / total
    return RateFit(slope=float(slope), intercept=float(intercept), r_squared=r_squared)


class LevelResult(BaseModel):
    N: int
    h: float
    l1w_error: float | None = None
    linf_error: float | None = None
    sup_t_l1w_error: float | None = None
    max_m1: float | None = None
    max_m2: float | None = None
    remainder_l1: float | None = None
    reference: bool = False
    diverged: bool = False


class ConvergenceReport(BaseModel):
    d: int
    scheme: str
    metric: str
    T: float
    r0: float
    levels: list[LevelResult]
    error_fit: RateFit | None = None
    spacing_fit: RateFit | None = None
    remainder_fit: RateFit | None = None
    m1_ratio: float | None = None
    m2_ratio: float | None = None
    monotone_decay: bool = True

    @property
    def compared(self) -> list[LevelResult]:
        return [
            level
            for level in self.levels
            if not level.reference and not level.diverged and level.l1w_error is not None
        ]

    @property
    def h_list(self) -> list[float]:
        return [level.h for level in self.compared]

    @property
    def slope(self) -> float | None:
        """The gated first-order rate."""
        return None if self.spacing_fit is None else self.spacing_fit.slope

    def rows(self) -> list[list[float]]:
        """N, h, l1w_error, linf_error, max_m1, max_m2, remainder_l1 per compared level."""
        return [
            [
                float(level.N),
                level.h,
                float(level.l1w_error or 0.0),
                float(level.linf_error or 0.0),
                float(level.max_m1 or 0.0),
                float(level.max_m2 or 0.0),
                float(level.remainder_l1 or 0.0),
            ]
            for level in self.compared
        ]


def check_nested(N_list: Sequence[int]) -> list[int]:
    levels = sorted(set(N_list))
    if len(levels) != len(N_list):
        raise DomainError(f"N_list has repeated entries: {list(N_list)}")
    finest = levels[-1]
    bad = [N for N in levels if finest % N != 0]
    if bad:
        raise LatticeMismatchError(
            f"N_list is not nested: {bad} do not divide the finest N={finest}"
        )
    return levels


def _ratio(values: list[float]) -> float | None:
    positive = [v for v in values if v > 0.0]
    if len(positive) != len(values) or not positive:
        return None
    return max(positive) / min(positive)


def _safe_fit(h: list[float], e: list[float], label: str) -> RateFit | None:
    if len(h) < MIN_FIT_POINTS or any(v <= 0.0 for v in e):
        logger.warning("skipping %s rate fit: %d usable levels", label, len(h))
        return None
    return fit_rate(h, e)


def refinement_study(
    base: SolverConfig, N_list: Sequence[int], threads: int = 1
) -> ConvergenceReport:
    levels = check_nested(N_list)
    if len(levels) < 2:
        raise DomainError("a refinement study needs at least two levels")

    def run(N: int) -> tuple[SemiDiscreteScheme, Solution | None]:
        scheme = SemiDiscreteScheme(base.with_N(N))
        try:
            return scheme, scheme.solve()
        except DivergenceError as exc:
            logger.error("level N=%d diverged at step %d", N, exc.step)
            return scheme, None

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(run, levels))

    ref_scheme, ref_solution = results[-1]
    if ref_solution is None:
        raise DivergenceError("the reference level diverged", step=-1)

    report_levels: list[LevelResult] = []
    for scheme, solution in results:
        N = scheme.lattice.N
        level = LevelResult(N=N, h=scheme.h, reference=scheme is ref_scheme)
        if solution is None:
            level.diverged = True
            report_levels.append(level)
            continue
        weight = weight_field(base.weight, scheme.lattice)
        level.max_m1 = max(solution.timeline.m1)
        level.max_m2 = max(solution.timeline.m2)
        level.remainder_l1 = scheme.remainders(solution.final).l1
        if not level.reference:
            mass = total_mass(weight)
            restricted = restrict(ref_solution.final, scheme.lattice)
            diff = Field(scheme.lattice, solution.final.values - restricted.values)
            level.l1w_error = weighted_l1(diff, weight) / mass
            level.linf_error = diff.sup_norm()
            level.sup_t_l1w_error = max(
                weighted_l1(
                    Field(
                        scheme.lattice,
                        snap.values
                        - restrict(ref_solution.snapshots[t], scheme.lattice).values,
                    ),
                    weight,
                )
                / mass
                for t, snap in solution.snapshots.items()
            )
            logger.info(
                "N=%d: l1w=%.6g linf=%.6g sup_t l1w=%.6g",
                N,
                level.l1w_error,
                level.linf_error,
                level.sup_t_l1w_error,
            )
        report_levels.append(level)

    report = ConvergenceReport(
        d=base.graph.d,
        scheme=str(base.hamiltonian.scheme),
        metric=str(base.metric),
        T=base.T,
        r0=base.hamiltonian.r0,
        levels=report_levels,
    )
    compared = report.compared
    report.error_fit = _safe_fit(
        [lv.h for lv in compared], [float(lv.l1w_error or 0.0) for lv in compared], "error"
    )
    h_ref = next(lv.h for lv in report_levels if lv.reference)
    report.spacing_fit = _safe_fit(
        [lv.h - h_ref for lv in compared],
        [float(lv.l1w_error or 0.0) for lv in compared],
        "spacing",
    )
    solved = [lv for lv in report_levels if not lv.diverged]
    report.remainder_fit = _safe_fit(
        [lv.h for lv in solved],
        [float(lv.remainder_l1 or 0.0) for lv in solved],
        "remainder",
    )
    report.m1_ratio = _ratio([float(lv.max_m1 or 0.0) for lv in solved])
    report.m2_ratio = _ratio([float(lv.max_m2 or 0.0) for lv in solved])
    errors = [float(lv.l1w_error or 0.0) for lv in compared]
    report.monotone_decay = all(
        later <= earlier * (1.0 + 1e-12)
        for earlier, later in zip(errors[1:], errors[2:])
    )
    if report.error_fit is not None and report.spacing_fit is not None:
        logger.info(
            "fitted slope %.4f against h - h_ref (R^2 %.4f), %.4f against h, over %d levels",
            report.spacing_fit.slope,
            report.spacing_fit.r_squared,
            report.error_fit.slope,
            len(compared),
        )
    return report
