"""Characteristic exponents of the coupled pricing ODEs.

Trial solutions x^beta of the coupled system reduce, per regime i and
branch k, to the quadratic

    G_i^k(beta) = 0.5 sigma_i^2 beta (beta - 1) + mu_i beta - c_i^k,

with decay constant c_i^k = lambda_i + r, plus eta on the branch above the
threshold for regime 1 (k = "U").  Coupling the two regimes multiplies the
quadratics into the quartic

    F^k(beta) = G_0^k(beta) G_1^k(beta) - lambda0 lambda1.

F^k has four simple real roots.  The value function keeps the two positive
roots of F^L (vanishing at 0+) and the two negative roots of F^U (linear
growth at infinity).  The quadratic roots zeta interlace them:

    1 < beta_LB < zeta_i^{L,+} < beta_LA,
    beta_UB < zeta_i^{U,-} < beta_UA < 0,

which supplies rigorous brackets for bisection; a closed-form quartic
solution would be numerically fragile by comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import BracketFailure
from .model import ModelParams

__all__ = [
    "QuadraticRoots",
    "RootSet",
    "g_value",
    "f_value",
    "quadratic_roots",
    "quartic_branch_roots",
    "solve_roots",
]

_BISECT_ITERS = 60
_NEWTON_STEPS = 3
# doubling cap when expanding a bracket away from the zeta endpoints
_EXPAND_CAP = 2.0**40


@dataclass(frozen=True)
class QuadraticRoots:
    """Both roots of G_i^k for one (regime, branch); zeta_minus < 0 < zeta_plus."""

    regime: int
    branch: str
    zeta_plus: float
    zeta_minus: float


@dataclass(frozen=True)
class RootSet:
    """The four retained quartic roots plus the quadratic brackets.

    beta_la > beta_lb > 1 are the positive roots of F^L;
    beta_ub < beta_ua < 0 are the negative roots of F^U.
    """

    beta_la: float
    beta_lb: float
    beta_ua: float
    beta_ub: float
    zeta_l0: QuadraticRoots
    zeta_l1: QuadraticRoots
    zeta_u0: QuadraticRoots
    zeta_u1: QuadraticRoots


def _decay_constant(params: ModelParams, regime: int, branch: str) -> float:
    extra = params.eta if (regime == 1 and branch == "U") else 0.0
    return params.lam(regime) + params.r + extra


def g_value(params: ModelParams, regime: int, branch: str, beta):
    """G_i^k(beta); accepts scalar or array beta."""
    sig2 = params.sigma(regime) ** 2
    return 0.5 * sig2 * beta * (beta - 1.0) + params.mu(regime) * beta - _decay_constant(
        params, regime, branch
    )


def _g_derivative(params: ModelParams, regime: int, beta: float) -> float:
    sig2 = params.sigma(regime) ** 2
    return sig2 * beta - 0.5 * sig2 + params.mu(regime)


def f_value(params: ModelParams, branch: str, beta):
    """F^k(beta) = G_0^k(beta) G_1^k(beta) - lambda0 lambda1."""
    return g_value(params, 0, branch, beta) * g_value(params, 1, branch, beta) - (
        params.lambda0 * params.lambda1
    )


def _f_derivative(params: ModelParams, branch: str, beta: float) -> float:
    g0 = g_value(params, 0, branch, beta)
    g1 = g_value(params, 1, branch, beta)
    return _g_derivative(params, 0, beta) * g1 + g0 * _g_derivative(params, 1, beta)


def quadratic_roots(params: ModelParams, regime: int, branch: str) -> QuadraticRoots:
    """Closed-form roots of G_i^k; one positive and one negative.

    The constant term is strictly negative, so the discriminant is positive
    and the roots straddle zero.  The small-magnitude root is recovered from
    the product of roots to avoid cancellation when the linear term is large.
    """
    a = 0.5 * params.sigma(regime) ** 2
    b = params.mu(regime) - a
    c = -_decay_constant(params, regime, branch)
    disc = b * b - 4.0 * a * c
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    r1 = q / a
    r2 = c / q
    zp, zm = (r1, r2) if r1 > r2 else (r2, r1)
    return QuadraticRoots(regime=regime, branch=branch, zeta_plus=zp, zeta_minus=zm)


def _bisect(f, lo: float, hi: float, flo: float) -> float:
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fmid = f(mid)
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _polish(params: ModelParams, branch: str, beta: float, lo: float, hi: float) -> float:
    for _ in range(_NEWTON_STEPS):
        deriv = _f_derivative(params, branch, beta)
        if deriv == 0.0:
            break
        step = f_value(params, branch, beta) / deriv
        candidate = beta - step
        if not (lo <= candidate <= hi) or not math.isfinite(candidate):
            break
        beta = candidate
    return beta


def _expand_bracket(f, anchor: float, direction: float):
    """Double outward from ``anchor`` (where f < 0) until f changes sign."""
    width = max(1.0, abs(anchor) * 0.5)
    while width <= _EXPAND_CAP * max(1.0, abs(anchor)):
        probe = anchor + direction * width
        fp = f(probe)
        if math.isfinite(fp) and fp > 0.0:
            return probe
        width *= 2.0
    raise BracketFailure(
        f"no sign change found expanding from {anchor} (direction {direction:+.0f})"
    )


def quartic_branch_roots(params: ModelParams, branch: str):
    """The two retained roots of F^k, ordered (outer, inner).

    For k = "L" returns (beta_la, beta_lb) with beta_la > beta_lb > 1; for
    k = "U" returns (beta_ua, beta_ub) with beta_ub < beta_ua < 0.  The inner
    root is bisected between the fixed endpoint (1 for L, 0 for U) and the
    nearest quadratic root; the outer root between the farthest quadratic
    root and a doubling-expanded endpoint.  Newton steps finish each root.
    """
    if branch not in ("L", "U"):
        raise ValueError(f"branch must be 'L' or 'U', got {branch!r}")
    z0 = quadratic_roots(params, 0, branch)
    z1 = quadratic_roots(params, 1, branch)

    def f(beta):
        return f_value(params, branch, beta)

    if branch == "L":
        zeta_near = min(z0.zeta_plus, z1.zeta_plus)
        zeta_far = max(z0.zeta_plus, z1.zeta_plus)
        fixed = 1.0 + 1e-12
        fixed_label = "F^L(1)"
    else:
        zeta_near = max(z0.zeta_minus, z1.zeta_minus)
        zeta_far = min(z0.zeta_minus, z1.zeta_minus)
        fixed = 0.0
        fixed_label = "F^U(0)"

    f_fixed = f(fixed)
    if f_fixed <= 0.0:
        raise BracketFailure(
            f"{fixed_label} <= 0: the inner bracket has no sign change"
        )
    if f(zeta_near) >= 0.0 or f(zeta_far) >= 0.0:
        raise BracketFailure(
            f"F^{branch} is non-negative at a quadratic root; "
            "the interlacing structure does not hold for these parameters"
        )

    if branch == "L":
        inner = _bisect(f, fixed, zeta_near, f_fixed)
        inner = _polish(params, branch, inner, fixed, zeta_near)
        outer_hi = _expand_bracket(f, zeta_far, +1.0)
        outer = _bisect(f, zeta_far, outer_hi, f(zeta_far))
        outer = _polish(params, branch, outer, zeta_far, outer_hi)
        return outer, inner  # (beta_la, beta_lb)
    inner = _bisect(f, zeta_near, fixed, f(zeta_near))
    inner = _polish(params, branch, inner, zeta_near, fixed)
    outer_lo = _expand_bracket(f, zeta_far, -1.0)
    outer = _bisect(f, outer_lo, zeta_far, f(outer_lo))
    outer = _polish(params, branch, outer, outer_lo, zeta_far)
    return inner, outer  # (beta_ua, beta_ub)


def _residual_tolerance(params: ModelParams, branch: str) -> float:
    # |F| equals lambda0*lambda1 at every zeta bracket endpoint; F(0) and
    # F(1) share that order of magnitude
    scale = max(params.lambda0 * params.lambda1, abs(f_value(params, branch, 0.0)))
    return 1e-10 * (1.0 + scale)


def solve_roots(params: ModelParams) -> RootSet:
    """Compute the RootSet and verify the interlacing chain and residuals.

    Any numerical violation of the ordering or of the residual tolerance is
    reported as BracketFailure rather than silently repaired.
    """
    beta_la, beta_lb = quartic_branch_roots(params, "L")
    beta_ua, beta_ub = quartic_branch_roots(params, "U")
    zl0 = quadratic_roots(params, 0, "L")
    zl1 = quadratic_roots(params, 1, "L")
    zu0 = quadratic_roots(params, 0, "U")
    zu1 = quadratic_roots(params, 1, "U")

    chain_ok = (
        1.0 < beta_lb
        and beta_lb < min(zl0.zeta_plus, zl1.zeta_plus)
        and max(zl0.zeta_plus, zl1.zeta_plus) < beta_la
        and beta_ub < min(zu0.zeta_minus, zu1.zeta_minus)
        and max(zu0.zeta_minus, zu1.zeta_minus) < beta_ua < 0.0
    )
    if not chain_ok:
        raise BracketFailure(
            "root ordering chain violated: "
            f"L=({beta_la}, {beta_lb}), U=({beta_ua}, {beta_ub})"
        )
    for branch, root in (("L", beta_la), ("L", beta_lb), ("U", beta_ua), ("U", beta_ub)):
        resid = f_value(params, branch, root)
        if abs(resid) > _residual_tolerance(params, branch):
            raise BracketFailure(
                f"|F^{branch}({root})| = {abs(resid):.3e} exceeds the residual tolerance"
            )
    return RootSet(
        beta_la=beta_la,
        beta_lb=beta_lb,
        beta_ua=beta_ua,
        beta_ub=beta_ub,
        zeta_l0=zl0,
        zeta_l1=zl1,
        zeta_u0=zu0,
        zeta_u1=zu1,
    )
