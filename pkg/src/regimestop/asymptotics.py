"""Closed-form limits when the regimes share one diffusion.

With mu0 = mu1 = mu and sigma0 = sigma1 = sigma the quartics factor through
the single quadratic h(beta) = 0.5 sigma^2 beta (beta - 1) + mu beta - r and
all four exponents have explicit square-root forms.  Two limits then admit
closed-form thresholds and value functions:

* eta -> infinity: opportunities arrive continuously and only the regime
  constraint remains;
* lambda0 -> infinity: regime 0 vanishes and only the random arrival
  constraint remains.

The limiting forms are implemented directly from their explicit
expressions, never by feeding huge eta or lambda0 into the general solver
(beta_la -> infinity in the second limit would overflow any power
evaluation); the general solver is used only for finite-parameter
convergence experiments against these limits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolated, NonPositiveParameter
from .model import ModelParams
from .solver import solve

__all__ = [
    "SingleDiffusionParams",
    "AsymptoticResult",
    "LimitValueFunctions",
    "closed_form_exponents",
    "threshold_eta_limit",
    "threshold_lambda0_limit",
    "limit_value_functions",
    "convergence_table",
]


@dataclass(frozen=True)
class SingleDiffusionParams:
    """Symmetric-regime restriction: one drift, one volatility."""

    r: float
    mu: float
    sigma: float
    lambda0: float
    lambda1: float
    eta: float
    alpha: float
    k_tilde: float

    def __post_init__(self):
        for name in ("r", "sigma", "lambda0", "lambda1", "eta", "alpha", "k_tilde"):
            if not getattr(self, name) > 0.0:
                raise NonPositiveParameter(name, "must be > 0")
        if self.r <= self.mu:
            raise AssumptionViolated("single-diffusion asymptotics require r > mu")

    @classmethod
    def from_model_params(cls, params: ModelParams) -> "SingleDiffusionParams":
        if params.mu0 != params.mu1 or params.sigma0 != params.sigma1:
            raise ValueError("regimes must share drift and volatility")
        return cls(
            r=params.r,
            mu=params.mu0,
            sigma=params.sigma0,
            lambda0=params.lambda0,
            lambda1=params.lambda1,
            eta=params.eta,
            alpha=params.alpha,
            k_tilde=params.k_tilde,
        )

    def to_model_params(
        self, eta: float | None = None, lambda0: float | None = None
    ) -> ModelParams:
        """General-solver parameters, optionally overriding eta or lambda0.

        The payoff is split as K = k_tilde, I = 0; the solution depends on
        the payoff only through alpha and k_tilde.
        """
        return ModelParams(
            r=self.r,
            mu0=self.mu,
            mu1=self.mu,
            sigma0=self.sigma,
            sigma1=self.sigma,
            lambda0=self.lambda0 if lambda0 is None else lambda0,
            lambda1=self.lambda1,
            eta=self.eta if eta is None else eta,
            alpha=self.alpha,
            bigK=self.k_tilde,
            bigI=0.0,
        )


@dataclass(frozen=True)
class AsymptoticResult:
    """Limiting threshold with its proven lower bound and the exponents used."""

    limit: str  # "eta" | "lambda0"
    xstar_inf: float
    lower_bound: float
    exponents: dict


@dataclass(frozen=True)
class LimitValueFunctions:
    """Tabulated limiting value functions on a grid.

    For the eta limit, ``v1_dominates_payoff`` reports whether the limiting
    v1 stays above max(alpha (x - k_tilde), 0) left of the threshold (the
    assumption under which the limiting v0 form is valid); it is computed,
    not assumed.
    """

    limit: str
    xstar_inf: float
    x: np.ndarray
    v0: np.ndarray
    v1: np.ndarray
    v1_dominates_payoff: bool


def closed_form_exponents(p: SingleDiffusionParams):
    """(beta_la, beta_lb, beta_ua, beta_ub) for the symmetric-regime model."""
    m = 0.5 - p.mu / p.sigma**2
    sig2 = p.sigma**2
    beta_la = m + math.sqrt(m * m + 2.0 * (p.lambda0 + p.lambda1 + p.r) / sig2)
    beta_lb = m + math.sqrt(m * m + 2.0 * p.r / sig2)
    s = p.lambda0 + p.lambda1 + p.eta
    inner = math.sqrt(s * s - 4.0 * p.lambda0 * p.eta)
    beta_ua = m - math.sqrt(m * m + (s + 2.0 * p.r - inner) / sig2)
    beta_ub = m - math.sqrt(m * m + (s + 2.0 * p.r + inner) / sig2)
    return beta_la, beta_lb, beta_ua, beta_ub


def _zeta_minus_l0(p: SingleDiffusionParams) -> float:
    # negative root of 0.5 sigma^2 b(b-1) + mu b - (lambda0 + r); also the
    # eta -> infinity limit of beta_ua
    m = 0.5 - p.mu / p.sigma**2
    return m - math.sqrt(m * m + 2.0 * (p.lambda0 + p.r) / p.sigma**2)


def threshold_eta_limit(p: SingleDiffusionParams) -> AsymptoticResult:
    """Limiting threshold as opportunities arrive continuously."""
    beta_la, beta_lb, _, _ = closed_form_exponents(p)
    z = _zeta_minus_l0(p)
    r, mu, l0, l1, kt = p.r, p.mu, p.lambda0, p.lambda1, p.k_tilde
    num = (r - mu + l0) * (
        (l0 * (beta_la - z) * beta_lb + l1 * (beta_lb - z) * beta_la) * (r + l0)
        + z * (beta_la - beta_lb) * l0 * l1
    ) * kt
    den = (r + l0) * (
        (l0 * (beta_la - z) * (beta_lb - 1.0) + l1 * (beta_lb - z) * (beta_la - 1.0))
        * (r - mu + l0)
        + (z - 1.0) * (beta_la - beta_lb) * l0 * l1
    )
    return AsymptoticResult(
        limit="eta",
        xstar_inf=num / den,
        lower_bound=beta_la / (beta_la - 1.0) * kt,
        exponents={"beta_la": beta_la, "beta_lb": beta_lb, "zeta_minus_l0": z},
    )


def threshold_lambda0_limit(p: SingleDiffusionParams) -> AsymptoticResult:
    """Limiting threshold as regime 0 vanishes."""
    _, beta_lb, _, _ = closed_form_exponents(p)
    m = 0.5 - p.mu / p.sigma**2
    beta_ua = m - math.sqrt(m * m + 2.0 * (p.eta + p.r) / p.sigma**2)
    r, mu, eta, kt = p.r, p.mu, p.eta, p.k_tilde
    num = (r - mu + eta) * ((r + eta) * beta_lb - r * beta_ua) * kt
    den = (r + eta) * ((r - mu + eta) * beta_lb - (r - mu) * beta_ua - eta)
    return AsymptoticResult(
        limit="lambda0",
        xstar_inf=num / den,
        lower_bound=r * (r - mu + eta) * kt / ((r - mu) * (r + eta)),
        exponents={"beta_lb": beta_lb, "beta_ua": beta_ua},
    )


def limit_value_functions(
    p: SingleDiffusionParams, limit: str, x
) -> LimitValueFunctions:
    """Evaluate the limiting v0 and v1 on a positive grid."""
    grid = np.asarray(x, dtype=float)
    if np.any(grid <= 0.0):
        raise ValueError("grid points must be positive")
    alpha, kt = p.alpha, p.k_tilde

    if limit == "eta":
        res = threshold_eta_limit(p)
        xs = res.xstar_inf
        beta_la = res.exponents["beta_la"]
        beta_lb = res.exponents["beta_lb"]
        z = res.exponents["zeta_minus_l0"]
        c_a = ((1.0 - beta_lb) * alpha * xs + beta_lb * alpha * kt) / (beta_la - beta_lb)
        c_b = ((beta_la - 1.0) * alpha * xs - beta_la * alpha * kt) / (beta_la - beta_lb)
        ratio = grid / xs
        left = grid < xs
        v1 = np.where(left, c_a * ratio**beta_la + c_b * ratio**beta_lb,
                      alpha * grid - alpha * kt)
        a0_lim = alpha * p.lambda0 / (p.r - p.mu + p.lambda0)
        b0_lim = -alpha * kt * p.lambda0 / (p.r + p.lambda0)
        a_bar = -p.lambda0 / p.lambda1 * c_a + c_b - a0_lim * xs - b0_lim
        v0 = np.where(
            left,
            -p.lambda0 / p.lambda1 * c_a * ratio**beta_la + c_b * ratio**beta_lb,
            a_bar * ratio**z + a0_lim * grid + b0_lim,
        )
        payoff_floor = np.maximum(alpha * (grid - kt), 0.0)
        mask = left
        dominated = bool(np.all(v1[mask] >= payoff_floor[mask] - 1e-12)) if mask.any() else True
        return LimitValueFunctions(
            limit="eta", xstar_inf=xs, x=grid, v0=v0, v1=v1,
            v1_dominates_payoff=dominated,
        )

    if limit == "lambda0":
        res = threshold_lambda0_limit(p)
        xs = res.xstar_inf
        beta_lb = res.exponents["beta_lb"]
        beta_ua = res.exponents["beta_ua"]
        ratio = grid / xs
        left = grid < xs
        coef_u = (p.r - p.mu) * alpha * xs / (p.r - p.mu + p.eta) - p.r * alpha * kt / (
            p.r + p.eta
        )
        v1 = np.where(
            left,
            alpha * (xs - kt) * ratio**beta_lb,
            coef_u * ratio**beta_ua
            + alpha * p.eta / (p.r - p.mu + p.eta) * grid
            - alpha * kt * p.eta / (p.r + p.eta),
        )
        return LimitValueFunctions(
            limit="lambda0", xstar_inf=xs, x=grid, v0=v1.copy(), v1=v1,
            v1_dominates_payoff=True,
        )

    raise ValueError("limit must be 'eta' or 'lambda0'")


def convergence_table(
    p: SingleDiffusionParams,
    limit: str,
    values=(10.0, 100.0, 1000.0, 10_000.0),
):
    """General-solver thresholds along increasing eta (or lambda0) vs the limit.

    Returns (xstar_inf, rows) with rows of (parameter value, x*, relative
    error against the limit).
    """
    if limit == "eta":
        xs_inf = threshold_eta_limit(p).xstar_inf
        make = lambda v: p.to_model_params(eta=v)
    elif limit == "lambda0":
        xs_inf = threshold_lambda0_limit(p).xstar_inf
        make = lambda v: p.to_model_params(lambda0=v)
    else:
        raise ValueError("limit must be 'eta' or 'lambda0'")
    rows = []
    for v in values:
        xstar = solve(make(v)).xstar
        rows.append((float(v), xstar, abs(xstar - xs_inf) / xs_inf))
    return xs_inf, rows
