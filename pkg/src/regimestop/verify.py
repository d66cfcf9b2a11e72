"""Numerical verification of the free-boundary inequalities.

The closed form guarantees value matching V_1(x*) = pi(x*) and the ODEs by
construction, but the strict inequalities

    V_1 > pi on (0, x*)      and      V_1 < pi on (x*, inf)

are only accessible numerically.  ``check_boundary_conditions`` evaluates
the margin V_1 - pi on a log grid spanning [1e-3, 1e3] * x*; because the
margin vanishes at x* by value matching, points within a small relative
window of x* are excluded to keep the sign test well posed.

``remark_sweep`` repeats the check over the full Cartesian product of a
reference parameter grid (8 drift values per regime x 4 values for each of
sigma0, sigma1, lambda0, lambda1, eta = 65536 combinations, with r and the
payoff fixed).
"""

from __future__ import annotations

import itertools
import os
import time
from dataclasses import dataclass, field
from functools import partial
from multiprocessing import Pool

import numpy as np

from .errors import RegimeStopError
from .model import ModelParams, payoff
from .solver import ViSolution, eval_piece, eval_value, solve

__all__ = [
    "BoundaryReport",
    "SweepConfig",
    "SweepFailure",
    "SweepResult",
    "check_boundary_conditions",
    "pasting_check",
    "sweep_parameter_sets",
    "remark_sweep",
]

PASTING_TOL = 1e-8


@dataclass(frozen=True)
class BoundaryReport:
    """Outcome of the inequality check for one solved parameter set.

    ``margin_below``  is min(V_1 - pi) left of the exclusion window (needs > 0),
    ``margin_above``  is max(V_1 - pi) right of it (needs < 0).
    ``tail_ratio``    is V_1 / pi at the right grid edge, with analytic limit
                      ``tail_ratio_limit`` = a_1 / alpha (inside (0, 1) under
                      the standing assumptions).
    """

    params: ModelParams
    xstar: float
    passed: bool
    margin_below: float
    margin_above: float
    tail_ratio: float
    tail_ratio_limit: float
    grid_points: int
    window: float
    span_decades: float


def check_boundary_conditions(
    sol: ViSolution,
    grid_points: int = 10_000,
    window: float = 1e-6,
    span_decades: float = 3.0,
) -> BoundaryReport:
    """Evaluate the sign of V_1 - pi on a log grid around the threshold.

    Failures are reported in the returned record, never raised.
    """
    if grid_points < 100:
        raise ValueError("grid_points must be at least 100")
    xstar = sol.xstar
    grid = xstar * np.logspace(-span_decades, span_decades, grid_points)
    margin = eval_value(sol, 1, grid) - payoff(sol.params, grid)
    below = grid < xstar * (1.0 - window)
    above = grid > xstar * (1.0 + window)
    margin_below = float(margin[below].min()) if below.any() else np.inf
    margin_above = float(margin[above].max()) if above.any() else -np.inf
    tail_ratio = float(
        eval_value(sol, 1, grid[-1]) / payoff(sol.params, grid[-1])
    )
    return BoundaryReport(
        params=sol.params,
        xstar=xstar,
        passed=(margin_below > 0.0) and (margin_above < 0.0),
        margin_below=margin_below,
        margin_above=margin_above,
        tail_ratio=tail_ratio,
        tail_ratio_limit=sol.part.a1 / sol.params.alpha,
        grid_points=grid_points,
        window=window,
        span_decades=span_decades,
    )


def pasting_check(sol: ViSolution) -> np.ndarray:
    """Relative left/right gaps of V_i at x* for derivative orders 0, 1, 2.

    Returns a (2, 3) array indexed [regime, order]; every entry is below
    PASTING_TOL for a valid solution.
    """
    gaps = np.empty((2, 3))
    for regime in (0, 1):
        for order in (0, 1, 2):
            left = eval_piece(sol, regime, sol.xstar, order, "left")
            right = eval_piece(sol, regime, sol.xstar, order, "right")
            scale = max(abs(left), abs(right), 1e-300)
            gaps[regime, order] = abs(left - right) / scale
    return gaps


@dataclass(frozen=True)
class SweepConfig:
    """Grid specification for the reference parameter sweep.

    ``mu_values`` feed both mu0 and mu1; ``scale_values`` feed sigma0,
    sigma1, lambda0, lambda1 and eta.  The Cartesian product is enumerated
    in lexicographic order (mu0, mu1, sigma0, sigma1, lambda0, lambda1, eta).
    """

    r: float = 0.1
    alpha: float = 1.0
    bigK: float = 0.9
    bigI: float = 0.1
    mu_values: tuple = (-10.0, -5.0, -2.0, -1.0, -0.5, 0.0, 0.05, 0.099)
    scale_values: tuple = (0.1, 1.0, 2.0, 5.0)
    grid_points: int = 10_000
    window: float = 1e-6
    workers: int | None = None

    @property
    def total(self) -> int:
        return len(self.mu_values) ** 2 * len(self.scale_values) ** 5


@dataclass(frozen=True)
class SweepFailure:
    params: ModelParams
    reason: str
    margin_below: float = np.nan
    margin_above: float = np.nan


@dataclass
class SweepResult:
    total: int
    passed: int
    failures: list = field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def summary(self) -> str:
        return f"passed {self.passed} of {self.total}"


def sweep_parameter_sets(config: SweepConfig = SweepConfig()):
    """All parameter combinations of the sweep, in canonical order."""
    sets = []
    for mu0, mu1, s0, s1, l0, l1, eta in itertools.product(
        config.mu_values,
        config.mu_values,
        config.scale_values,
        config.scale_values,
        config.scale_values,
        config.scale_values,
        config.scale_values,
    ):
        sets.append(
            ModelParams(
                r=config.r,
                mu0=mu0,
                mu1=mu1,
                sigma0=s0,
                sigma1=s1,
                lambda0=l0,
                lambda1=l1,
                eta=eta,
                alpha=config.alpha,
                bigK=config.bigK,
                bigI=config.bigI,
            )
        )
    return sets


def _check_one(params: ModelParams, grid_points: int, window: float):
    """Worker: solve and run every per-point invariant; failures become data."""
    try:
        sol = solve(params)
    except RegimeStopError as exc:
        return False, f"solver: {exc}", np.nan, np.nan
    bad_signs = sol.pq.sign_violations()
    if bad_signs:
        return False, f"sign facts violated: {', '.join(bad_signs)}", np.nan, np.nan
    if sol.xstar < params.k_tilde * (1.0 - 1e-12):
        return False, f"x*={sol.xstar} below k_tilde", np.nan, np.nan
    gaps = pasting_check(sol)
    if gaps.max() > PASTING_TOL:
        return False, f"pasting gap {gaps.max():.3e}", np.nan, np.nan
    report = check_boundary_conditions(sol, grid_points=grid_points, window=window)
    if not report.passed:
        return (
            False,
            "boundary inequalities failed",
            report.margin_below,
            report.margin_above,
        )
    return True, "", report.margin_below, report.margin_above


def remark_sweep(config: SweepConfig = SweepConfig()) -> SweepResult:
    """Run the full sweep; deterministic and independent of worker count."""
    params_list = sweep_parameter_sets(config)
    worker = partial(
        _check_one, grid_points=config.grid_points, window=config.window
    )
    start = time.perf_counter()
    workers = config.workers if config.workers is not None else (os.cpu_count() or 1)
    if workers > 1:
        with Pool(processes=workers) as pool:
            outcomes = pool.map(worker, params_list, chunksize=128)
    else:
        outcomes = [worker(p) for p in params_list]
    elapsed = time.perf_counter() - start

    result = SweepResult(total=len(params_list), passed=0, elapsed_seconds=elapsed)
    for params, (ok, reason, m_below, m_above) in zip(params_list, outcomes):
        if ok:
            result.passed += 1
        else:
            result.failures.append(
                SweepFailure(
                    params=params,
                    reason=reason,
                    margin_below=m_below,
                    margin_above=m_above,
                )
            )
    return result
