"""Model parameters, validation, the payoff, and the perpetuity formula.

The cash flow X is a two-regime switching geometric Brownian motion

    dX_t = X_t (mu_i dt + sigma_i dW_t)      while the regime is i in {0, 1},

where the regime is a continuous-time Markov chain flipping 0 -> 1 with
intensity lambda0 and 1 -> 0 with intensity lambda1.  Investment
opportunities arrive at the jump times of an independent Poisson(eta)
process and may only be taken while the regime is 1.  Exercising at state
x pays

    pi(x) = alpha * max(x - K, 0) - I.

The effective strike is K_tilde = K + I / alpha; the linearized payoff
alpha * x - alpha * K_tilde agrees with pi on [K, inf), and every
downstream formula consumes K_tilde rather than K and I separately.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields

from .errors import (
    AssumptionViolated,
    AssumptionWarning,
    DegeneratePayoff,
    NonPositiveParameter,
    ParamsFileError,
)

__all__ = [
    "ModelParams",
    "validate",
    "payoff",
    "linearized_payoff",
    "perpetuity_value",
    "parse_params_text",
    "load_params_file",
    "dump_params_text",
]

_POSITIVE_FIELDS = ("r", "sigma0", "sigma1", "lambda0", "lambda1", "eta", "alpha")
_NONNEGATIVE_FIELDS = ("bigK", "bigI")


@dataclass(frozen=True)
class ModelParams:
    """All market and payoff scalars.  Immutable, safe to share across threads.

    r       : discount rate (> 0)
    mu0/mu1 : drift per regime
    sigma0/sigma1 : volatility per regime (> 0)
    lambda0/lambda1 : regime-switch intensities (> 0)
    eta     : opportunity-arrival intensity (> 0)
    alpha   : payoff slope (> 0)
    bigK    : payoff strike (>= 0)
    bigI    : fixed cost (>= 0); bigK = bigI = 0 is excluded
    """

    r: float
    mu0: float
    mu1: float
    sigma0: float
    sigma1: float
    lambda0: float
    lambda1: float
    eta: float
    alpha: float
    bigK: float
    bigI: float

    @property
    def k_tilde(self) -> float:
        """Effective strike K + I/alpha; the threshold satisfies x* >= k_tilde."""
        return self.bigK + self.bigI / self.alpha

    @property
    def mu_max(self) -> float:
        return max(self.mu0, self.mu1)

    def mu(self, i: int) -> float:
        return self.mu1 if i == 1 else self.mu0

    def sigma(self, i: int) -> float:
        return self.sigma1 if i == 1 else self.sigma0

    def lam(self, i: int) -> float:
        return self.lambda1 if i == 1 else self.lambda0


def validate(params: ModelParams, permissive: bool = False) -> ModelParams:
    """Check every invariant and return ``params`` unchanged.

    Raises NonPositiveParameter / DegeneratePayoff on malformed input.  The
    discounting assumption r > max(mu0, mu1) raises AssumptionViolated in
    strict mode; with ``permissive=True`` it only emits an AssumptionWarning
    (closed forms still evaluate, but no decay bound exists for simulation
    horizons).
    """
    for f in fields(params):
        value = getattr(params, f.name)
        if not math.isfinite(value):
            raise NonPositiveParameter(f.name, "must be a finite number")
    for name in _POSITIVE_FIELDS:
        if getattr(params, name) <= 0.0:
            raise NonPositiveParameter(name, "must be > 0")
    for name in _NONNEGATIVE_FIELDS:
        if getattr(params, name) < 0.0:
            raise NonPositiveParameter(name, "must be >= 0")
    if params.bigK == 0.0 and params.bigI == 0.0:
        raise DegeneratePayoff("bigK and bigI cannot both be zero")
    if params.r <= params.mu_max:
        msg = (
            f"r={params.r} must exceed max(mu0, mu1)={params.mu_max} "
            "for discounted values to be finite"
        )
        if not permissive:
            raise AssumptionViolated(msg)
        warnings.warn(msg, AssumptionWarning, stacklevel=2)
    return params


def payoff(params: ModelParams, x):
    """pi(x) = alpha * max(x - K, 0) - I.  Accepts scalars or numpy arrays."""
    import numpy as np

    return params.alpha * np.maximum(x - params.bigK, 0.0) - params.bigI


def linearized_payoff(params: ModelParams, x):
    """alpha * x - alpha * K_tilde; equals pi(x) for x >= K."""
    return params.alpha * x - params.alpha * params.k_tilde


def perpetuity_value(params: ModelParams, regime: int, x: float) -> float:
    """Expected discounted integral of X started at x in the given regime.

    E[ int_0^inf e^{-rt} X_t dt ] for the two-regime model; linear in x.
    Requires r > max(mu0, mu1).
    """
    if params.r <= params.mu_max:
        raise AssumptionViolated(
            "perpetuity value requires r > max(mu0, mu1)"
        )
    mu_own = params.mu(regime)
    mu_other = params.mu(1 - regime)
    lam_own = params.lam(regime)
    lam_other = params.lam(1 - regime)
    r = params.r
    num = (r - mu_other + lam_own + lam_other) * x
    den = (r - mu_other) * (r - mu_own) + lam_own * (r - mu_other) + lam_other * (r - mu_own)
    return num / den


# --- flat key-value parameter files -------------------------------------

_PARAM_KEYS = (
    "r", "mu0", "mu1", "sigma0", "sigma1",
    "lambda0", "lambda1", "eta", "alpha", "bigK", "bigI",
)


def parse_params_text(text: str) -> ModelParams:
    """Parse a flat ``key = value`` config (one pair per line, '#' comments)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParamsFileError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _PARAM_KEYS:
            raise ParamsFileError(key, "unknown parameter name")
        if key in values:
            raise ParamsFileError(key, "duplicated parameter")
        try:
            values[key] = float(val)
        except ValueError:
            raise ParamsFileError(key, f"cannot parse {val!r} as a decimal number") from None
    missing = [k for k in _PARAM_KEYS if k not in values]
    if missing:
        raise ParamsFileError(missing[0], "missing parameter")
    return ModelParams(**values)


def load_params_file(path) -> ModelParams:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_params_text(fh.read())


def dump_params_text(params: ModelParams) -> str:
    """Serialize to the flat config format; repr round-trips every double."""
    lines = [f"{key} = {getattr(params, key)!r}" for key in _PARAM_KEYS]
    return "\n".join(lines) + "\n"
