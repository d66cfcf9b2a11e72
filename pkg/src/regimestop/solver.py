"""Closed-form solution of the threshold problem.

Below the threshold x* both value functions are combinations of the two
positive exponents of the lower branch; above it they pick up the negative
exponents of the upper branch plus a linear particular solution a_i x + b_i:

    V_i(x) = A_i^L x^{beta_LA} + B_i^L x^{beta_LB},                 0 < x < x*,
    V_i(x) = A_i^U x^{beta_UA} + B_i^U x^{beta_UB} + a_i x + b_i,   x > x*.

Imposing C2 value matching of V_1 against the linearized payoff at an
arbitrary threshold parameterizes every coefficient as a linear function of
the threshold, A_1^k = (x*)^{-beta}(P x* + Q), with a closed-form octet of
P/Q constants.  Continuity of V_0 and V_0' then collapses to one linear
equation P_total x* + Q_total = 0, giving the threshold as a ratio.

Coefficients are stored in threshold-scaled form c = P x* + Q so that
evaluation uses (x / x*)^beta; with exponents in the thousands (tiny
volatility, large drift) the raw A x^beta form would overflow.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonPositiveThreshold, SingularDenominator
from .model import ModelParams, linearized_payoff, payoff, validate
from .roots import RootSet, g_value, solve_roots

__all__ = [
    "ParticularSolution",
    "PqOctet",
    "ViSolution",
    "ValueFunction",
    "particular_solution",
    "pq_octet",
    "optimal_threshold",
    "boundary_coefficients",
    "solve",
    "solution_at_threshold",
    "eval_value",
    "eval_piece",
    "ode_residual",
]

_PASTING_GUARD = 1e-10
_KTILDE_SLACK = 1e-12


@dataclass(frozen=True)
class ParticularSolution:
    """Linear-plus-constant solution a_i x + b_i of the inhomogeneous system."""

    a0: float
    a1: float
    b0: float
    b1: float


@dataclass(frozen=True)
class PqOctet:
    """Slope/intercept pairs of the threshold-parameterized coefficients.

    A_1^k = (x*)^{-beta_A^k}(p x* + q) and likewise for B_1^k; under the
    standing assumptions p_la, p_ub < 0 < p_lb, p_ua and q_lb, q_ua < 0 <
    q_la, q_ub.
    """

    p_la: float
    q_la: float
    p_lb: float
    q_lb: float
    p_ua: float
    q_ua: float
    p_ub: float
    q_ub: float

    def sign_violations(self):
        """Names of entries whose strict-mode sign fact fails (empty if none)."""
        expected_negative = ("p_la", "p_ub", "q_lb", "q_ua")
        expected_positive = ("p_lb", "p_ua", "q_la", "q_ub")
        bad = [n for n in expected_negative if getattr(self, n) >= 0.0]
        bad += [n for n in expected_positive if getattr(self, n) <= 0.0]
        return tuple(bad)


@dataclass(frozen=True)
class ViSolution:
    """Everything needed to evaluate V_0 and V_1 analytically.

    ``left_a[i]`` etc. are the threshold-scaled coefficients: below x*,
    V_i(x) = left_a[i] (x/x*)^{beta_la} + left_b[i] (x/x*)^{beta_lb}; above,
    V_i(x) = right_a[i] (x/x*)^{beta_ua} + right_b[i] (x/x*)^{beta_ub}
    + a_i x + b_i.  The conventional coefficients A_i^k = c (x*)^{-beta} are
    exposed as properties (they may underflow for extreme exponents; the
    scaled form never does on (x/x*) in [1e-4, 1e4]).
    """

    params: ModelParams
    roots: RootSet
    part: ParticularSolution
    pq: PqOctet
    xstar: float
    left_a: tuple
    left_b: tuple
    right_a: tuple
    right_b: tuple

    @property
    def al(self):
        """(A_0^L, A_1^L)."""
        s = self.xstar ** (-self.roots.beta_la)
        return (self.left_a[0] * s, self.left_a[1] * s)

    @property
    def bl(self):
        """(B_0^L, B_1^L)."""
        s = self.xstar ** (-self.roots.beta_lb)
        return (self.left_b[0] * s, self.left_b[1] * s)

    @property
    def au(self):
        """(A_0^U, A_1^U)."""
        s = self.xstar ** (-self.roots.beta_ua)
        return (self.right_a[0] * s, self.right_a[1] * s)

    @property
    def bu(self):
        """(B_0^U, B_1^U)."""
        s = self.xstar ** (-self.roots.beta_ub)
        return (self.right_b[0] * s, self.right_b[1] * s)

    def value_function(self, regime: int) -> "ValueFunction":
        return ValueFunction(self, regime)


class ValueFunction:
    """Analytic evaluator of V_i and its first two derivatives."""

    def __init__(self, solution: ViSolution, regime: int):
        if regime not in (0, 1):
            raise ValueError("regime must be 0 or 1")
        self.solution = solution
        self.regime = regime

    def __call__(self, x, derivative: int = 0):
        return eval_value(self.solution, self.regime, x, derivative)


def particular_solution(params: ModelParams) -> ParticularSolution:
    """The coefficients of the linear particular solution above the threshold."""
    r = params.r
    lam0, lam1, eta, alpha = params.lambda0, params.lambda1, params.eta, params.alpha
    kt = params.k_tilde
    den_a = (r - params.mu0 + lam0) * (r - params.mu1 + lam1 + eta) - lam0 * lam1
    den_b = lam0 * lam1 - (r + lam0) * (r + lam1 + eta)
    if den_a == 0.0 or den_b == 0.0:
        raise SingularDenominator(
            "particular-solution denominator vanished "
            f"(den_a={den_a}, den_b={den_b})"
        )
    return ParticularSolution(
        a0=alpha * eta * lam0 / den_a,
        a1=alpha * eta * (r - params.mu0 + lam0) / den_a,
        b0=alpha * kt * eta * lam0 / den_b,
        b1=alpha * kt * eta * (r + lam0) / den_b,
    )


def pq_octet(roots: RootSet, part: ParticularSolution, params: ModelParams) -> PqOctet:
    """The eight threshold-slope/intercept constants of the C2 matching system."""
    la, lb = roots.beta_la, roots.beta_lb
    ua, ub = roots.beta_ua, roots.beta_ub
    alpha, kt = params.alpha, params.k_tilde
    a1, b1 = part.a1, part.b1

    spread = la + lb - ua - ub
    den_l = (la - lb) * spread
    den_u = (ua - ub) * spread
    if den_l == 0.0 or den_u == 0.0:
        raise SingularDenominator("coincident exponents in the matching system")

    return PqOctet(
        p_la=(alpha * (lb - ua) * (-lb + ub) + a1 * (ua - 1.0) * (ub - 1.0)) / den_l,
        q_la=(-alpha * kt * (lb - ua) * (-lb + ub) + b1 * ua * ub) / den_l,
        p_lb=(alpha * (la - ua) * (la - ub) - a1 * (ua - 1.0) * (ub - 1.0)) / den_l,
        q_lb=(-alpha * kt * (la - ua) * (la - ub) - b1 * ua * ub) / den_l,
        p_ua=(alpha * (la - ub) * (lb - ub) + a1 * (ub - 1.0) * (la + lb - ub - 1.0)) / den_u,
        q_ua=(-alpha * kt * (la - ub) * (lb - ub) + b1 * ub * (la + lb - ub)) / den_u,
        p_ub=(alpha * (la - ua) * (-lb + ua) - a1 * (ua - 1.0) * (la + lb - ua - 1.0)) / den_u,
        q_ub=(-alpha * kt * (la - ua) * (-lb + ua) - b1 * ua * (la + lb - ua)) / den_u,
    )


def _threshold_terms(roots: RootSet, pq: PqOctet, params: ModelParams):
    """The four (weight / G_0) pairs entering the threshold ratio."""
    g_la = g_value(params, 0, "L", roots.beta_la)
    g_lb = g_value(params, 0, "L", roots.beta_lb)
    g_ua = g_value(params, 0, "U", roots.beta_ua)
    g_ub = g_value(params, 0, "U", roots.beta_ub)
    weights = (
        ((1.0 - roots.beta_la) / g_la, pq.p_la, pq.q_la),
        ((1.0 - roots.beta_lb) / g_lb, pq.p_lb, pq.q_lb),
        ((roots.beta_ua - 1.0) / g_ua, pq.p_ua, pq.q_ua),
        ((roots.beta_ub - 1.0) / g_ub, pq.p_ub, pq.q_ub),
    )
    return weights


def optimal_threshold(
    roots: RootSet, part: ParticularSolution, pq: PqOctet, params: ModelParams
) -> float:
    """Threshold x* = -Q_total / P_total from the collapsed matching equation."""
    p_total = 0.0
    q_total = part.b0 / params.lambda0
    for w, p, q in _threshold_terms(roots, pq, params):
        p_total += w * p
        q_total += w * q
    xstar = -q_total / p_total
    if not np.isfinite(xstar) or xstar <= 0.0:
        raise NonPositiveThreshold(
            f"threshold formula produced {xstar}; a sign invariant failed upstream"
        )
    return xstar


def boundary_coefficients(roots: RootSet, pq: PqOctet, xstar: float, params: ModelParams):
    """Conventional coefficients ((A_i^L), (B_i^L), (A_i^U), (B_i^U)) at ``xstar``.

    Index 0/1 of each pair is the regime.  Regime-0 coefficients follow from
    the regime-1 ones through the ODE coupling ratios -lambda0 / G_0^k(beta).
    """
    al1 = xstar ** (-roots.beta_la) * (pq.p_la * xstar + pq.q_la)
    bl1 = xstar ** (-roots.beta_lb) * (pq.p_lb * xstar + pq.q_lb)
    au1 = xstar ** (-roots.beta_ua) * (pq.p_ua * xstar + pq.q_ua)
    bu1 = xstar ** (-roots.beta_ub) * (pq.p_ub * xstar + pq.q_ub)
    al0 = -params.lambda0 / g_value(params, 0, "L", roots.beta_la) * al1
    bl0 = -params.lambda0 / g_value(params, 0, "L", roots.beta_lb) * bl1
    au0 = -params.lambda0 / g_value(params, 0, "U", roots.beta_ua) * au1
    bu0 = -params.lambda0 / g_value(params, 0, "U", roots.beta_ub) * bu1
    return (al0, al1), (bl0, bl1), (au0, au1), (bu0, bu1)


def solution_at_threshold(
    params: ModelParams, xstar: float, permissive: bool = False
) -> ViSolution:
    """Assemble the C2-matched V_1 (and coupled V_0) at an arbitrary threshold.

    Only the optimal threshold also makes V_0' continuous; other values are
    useful for perturbation experiments.  No threshold invariants are checked.
    """
    validate(params, permissive=permissive)
    roots = solve_roots(params)
    part = particular_solution(params)
    pq = pq_octet(roots, part, params)
    return _assemble(params, roots, part, pq, xstar)


def _assemble(params, roots, part, pq, xstar) -> ViSolution:
    lam0 = params.lambda0
    cl1_a = pq.p_la * xstar + pq.q_la
    cl1_b = pq.p_lb * xstar + pq.q_lb
    cu1_a = pq.p_ua * xstar + pq.q_ua
    cu1_b = pq.p_ub * xstar + pq.q_ub
    cl0_a = -lam0 / g_value(params, 0, "L", roots.beta_la) * cl1_a
    cl0_b = -lam0 / g_value(params, 0, "L", roots.beta_lb) * cl1_b
    cu0_a = -lam0 / g_value(params, 0, "U", roots.beta_ua) * cu1_a
    cu0_b = -lam0 / g_value(params, 0, "U", roots.beta_ub) * cu1_b
    return ViSolution(
        params=params,
        roots=roots,
        part=part,
        pq=pq,
        xstar=xstar,
        left_a=(cl0_a, cl1_a),
        left_b=(cl0_b, cl1_b),
        right_a=(cu0_a, cu1_a),
        right_b=(cu0_b, cu1_b),
    )


def solve(params: ModelParams, permissive: bool = False) -> ViSolution:
    """Validate, find the exponents, and assemble the full solution.

    Checks x* >= k_tilde and value matching V_1(x*) = pi(x*) before
    returning; violations indicate a parameter pathology and raise.
    """
    validate(params, permissive=permissive)
    roots = solve_roots(params)
    part = particular_solution(params)
    pq = pq_octet(roots, part, params)
    xstar = optimal_threshold(roots, part, pq, params)
    if xstar < params.k_tilde * (1.0 - _KTILDE_SLACK):
        raise NonPositiveThreshold(
            f"threshold {xstar} fell below the effective strike {params.k_tilde}"
        )
    sol = _assemble(params, roots, part, pq, xstar)
    v1_at_star = eval_value(sol, 1, xstar)
    target = payoff(params, xstar)
    if abs(v1_at_star - target) > _PASTING_GUARD * max(1.0, abs(target)):
        raise NonPositiveThreshold(
            f"value matching failed at the threshold: V1(x*)={v1_at_star}, "
            f"payoff={target}"
        )
    return sol


def _falling(beta, order):
    if order == 0:
        return 1.0
    if order == 1:
        return beta
    return beta * (beta - 1.0)


def eval_piece(sol: ViSolution, regime: int, x, derivative: int = 0, piece: str = "left"):
    """Evaluate one analytic piece (ignoring which side of x* the points lie on)."""
    if derivative not in (0, 1, 2):
        raise ValueError("derivative order must be 0, 1, or 2")
    arr = np.asarray(x, dtype=float)
    ratio = arr / sol.xstar
    scale = sol.xstar ** (-derivative)
    if piece == "left":
        la, lb = sol.roots.beta_la, sol.roots.beta_lb
        ca, cb = sol.left_a[regime], sol.left_b[regime]
        out = scale * (
            ca * _falling(la, derivative) * ratio ** (la - derivative)
            + cb * _falling(lb, derivative) * ratio ** (lb - derivative)
        )
    elif piece == "right":
        ua, ub = sol.roots.beta_ua, sol.roots.beta_ub
        ca, cb = sol.right_a[regime], sol.right_b[regime]
        out = scale * (
            ca * _falling(ua, derivative) * ratio ** (ua - derivative)
            + cb * _falling(ub, derivative) * ratio ** (ub - derivative)
        )
        a_i = sol.part.a1 if regime == 1 else sol.part.a0
        b_i = sol.part.b1 if regime == 1 else sol.part.b0
        if derivative == 0:
            out = out + a_i * arr + b_i
        elif derivative == 1:
            out = out + a_i
    else:
        raise ValueError("piece must be 'left' or 'right'")
    return out if arr.ndim else float(out)


def eval_value(sol: ViSolution, regime: int, x, derivative: int = 0):
    """V_regime(x) or its derivative; the left piece applies at x = x* itself."""
    if regime not in (0, 1):
        raise ValueError("regime must be 0 or 1")
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0.0) or not np.all(np.isfinite(arr)):
        raise DomainError("state values must be positive and finite")
    left_mask = arr <= sol.xstar
    out = np.empty_like(arr)
    if np.any(left_mask):
        out[left_mask] = eval_piece(sol, regime, arr[left_mask], derivative, "left")
    if not np.all(left_mask):
        right = ~left_mask
        out[right] = eval_piece(sol, regime, arr[right], derivative, "right")
    return out if arr.ndim else float(out)


def ode_residual(sol: ViSolution, regime: int, x):
    """Residual of the governing ODE for V_regime at x (0 for an exact solution).

    For regime 1 above the threshold the opportunity term uses the linearized
    payoff, which agrees with pi there because x* >= K_tilde >= K.
    """
    params = sol.params
    arr = np.asarray(x, dtype=float)
    v = eval_value(sol, regime, arr)
    v_other = eval_value(sol, 1 - regime, arr)
    dv = eval_value(sol, regime, arr, 1)
    d2v = eval_value(sol, regime, arr, 2)
    mu = params.mu(regime)
    sig = params.sigma(regime)
    lam = params.lam(regime)
    res = (
        -params.r * v
        + mu * arr * dv
        + 0.5 * sig * sig * arr * arr * d2v
        + lam * (v_other - v)
    )
    if regime == 1:
        above = arr > sol.xstar
        res = res + params.eta * (linearized_payoff(params, arr) - v) * above
    return res if arr.ndim else float(res)
