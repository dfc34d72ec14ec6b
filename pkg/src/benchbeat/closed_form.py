"""Closed-form optimal tracking control for the quadratic cumulative
tracking-difference objective, its clipped discrete form, and an ODE-based
numerical cross-check.

The coefficient functions are assembled from divided differences of
a -> exp(a * (T - t)), which evaluates every printed quotient without
catastrophic cancellation, including the degenerate-exponent limits
(e.g. 2*mu2 - eta -> 0, beta -> 0).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ClosedFormContext",
    "coef_A",
    "coef_D",
    "coef_B",
    "g_fn",
    "h_fn",
    "optimal_control",
    "control_components",
    "clipped_control",
    "ode_oracle",
]

_SERIES_TOL = 1e-7


def _phi1(z):
    """(e^z - 1)/z, series near 0."""
    if abs(z) < _SERIES_TOL:
        return 1.0 + z / 2.0 + z * z / 6.0
    return math.expm1(z) / z


def _phi2(z):
    """2*(e^z - 1 - z)/z^2, series near 0. Equals 1 at z = 0."""
    if abs(z) < _SERIES_TOL:
        return 1.0 + z / 3.0 + z * z / 12.0
    return 2.0 * (math.expm1(z) - z) / (z * z)


def _dd1(a, b, s):
    """First divided difference of x -> e^{x s} at nodes (a, b)."""
    return math.exp(b * s) * s * _phi1((a - b) * s)


def _dd2(a, b, c, s):
    """Second divided difference of x -> e^{x s} at nodes (a, b, c).

    Symmetric in its nodes; divides by the widest node gap for stability,
    with a series fallback when all nodes (nearly) coincide.
    """
    nodes = sorted((a, b, c))
    lo, mid, hi = nodes
    spread = hi - lo
    if abs(spread * s) < _SERIES_TOL:
        center = (a + b + c) / 3.0
        return 0.5 * s * s * math.exp(center * s) * _phi2(0.0)
    return (_dd1(hi, mid, s) - _dd1(mid, lo, s)) / spread


@dataclass
class ClosedFormContext:
    """Everything needed to evaluate the optimal tracking control.

    moments: jump-moment auxiliaries for the two assets (stock, bond);
    beta: annual outperformance target; c: cash-injection rate (wealth/yr);
    varrho_hat: benchmark stock fraction; (p_min, p_max): clip bounds for the
    discrete feasible form.
    """

    moments: object
    mu1: float
    mu2: float
    beta: float
    c: float
    T: float
    varrho_hat: float
    p_min: float = 0.0
    p_max: float = 1.5

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.p_min > self.p_max:
            raise ValueError("p_min must be <= p_max")
        dmu = self.mu1 - self.mu2
        if not (dmu > 0 and dmu + self.moments.vartheta > 0):
            warnings.warn(
                "drift-rate assumption violated: need mu1 - mu2 > 0 and "
                "mu1 - mu2 + vartheta > 0; control formulas may misbehave",
                RuntimeWarning,
            )


def _exponents(ctx):
    """(x, m) with x = 2*mu2 - eta and m = mu2 - phi."""
    return 2.0 * ctx.mu2 - ctx.moments.eta, ctx.mu2 - ctx.moments.phi


def coef_A(ctx, t):
    """A(t) = (e^{x(T-t)} - 1)/x, x = 2*mu2 - eta. A(T) = 0, A > 0 on [0, T)."""
    x, _ = _exponents(ctx)
    return _dd1(x, 0.0, ctx.T - t)


def coef_D(ctx, t, beta=None):
    """D(t) = 2 e^{beta T} (e^{-beta(T-t)} - e^{x(T-t)})/(x + beta)."""
    beta = ctx.beta if beta is None else beta
    x, _ = _exponents(ctx)
    return -2.0 * math.exp(beta * ctx.T) * _dd1(-beta, x, ctx.T - t)


def coef_B(ctx, t, beta=None, c=None):
    """B(t), proportional to the injection rate c; B(T) = 0.

    Expressed through second divided differences of e^{a(T-t)} at nodes
    (x, m, 0) and (x, m, -beta): B = 2c*(dd2(x,m,0) - e^{beta T} dd2(x,m,-beta)).
    """
    beta = ctx.beta if beta is None else beta
    c = ctx.c if c is None else c
    x, m = _exponents(ctx)
    s = ctx.T - t
    return 2.0 * c * (_dd2(x, m, 0.0, s) - math.exp(beta * ctx.T) * _dd2(x, m, -beta, s))


def g_fn(ctx, t, beta=None):
    """g(t) = -D/(2A): the wealth-target multiplier. At t = T the analytic
    limit e^{beta T} is used. Bounded by e^{beta t} <= g <= e^{beta T}."""
    beta = ctx.beta if beta is None else beta
    if ctx.T - t < 1e-12:
        return math.exp(beta * ctx.T)
    return -coef_D(ctx, t, beta) / (2.0 * coef_A(ctx, t))


def h_fn(ctx, t, beta=None, c=None):
    """h(t) = -B/(2A): the injection-anticipation term. h >= 0, h(T) = 0,
    exactly linear in c."""
    beta = ctx.beta if beta is None else beta
    c = ctx.c if c is None else c
    if ctx.T - t < 1e-12:
        return 0.0
    return -coef_B(ctx, t, beta, c) / (2.0 * coef_A(ctx, t))


def control_components(ctx, t, w, w_hat):
    """(p_cash, p_track) pieces of the optimal stock fraction."""
    w = np.asarray(w, dtype=float)
    if np.any(w == 0):
        raise ValueError("undefined control at zero wealth")
    mom = ctx.moments
    dmu = ctx.mu1 - ctx.mu2
    g = g_fn(ctx, t)
    h = h_fn(ctx, t)
    p_cash = (dmu / mom.gamma) * h / w
    p_track = ((dmu + mom.vartheta) / mom.gamma * (g * w_hat - w) + g * w_hat * ctx.varrho_hat) / w
    return p_cash, p_track


def optimal_control(ctx, t, w, w_hat):
    """Optimal stock fraction p*(t, w, w_hat); the bond gets 1 - p*.

    Contrarian: decreasing in w at fixed (t, w_hat). Vectorized over w/w_hat.
    """
    p_cash, p_track = control_components(ctx, t, w, w_hat)
    return p_cash + p_track


def clipped_control(ctx, t, w, w_hat):
    """Optimal stock fraction truncated to [p_min, p_max]."""
    return np.clip(optimal_control(ctx, t, w, w_hat), ctx.p_min, ctx.p_max)


def ode_oracle(ctx, n_steps=2000, betas=None, cs=None):
    """Backward RK4 integration of the coefficient ODE system:

        A' = -x A - 1,             A(T) = 0
        D' = -x D + 2 e^{beta t},  D(T) = 0
        B' = -(mu2 - phi) B - 2 c A - c D,   B(T) = 0

    with x = 2*mu2 - eta. Returns (ts, A, D, B) tabulated on an equispaced
    grid over [0, T]; D and B have one row per (beta, c) draw. Used only as
    a numerical cross-check of the closed forms.
    """
    if n_steps < 100:
        raise ValueError("need at least 100 steps")
    betas = np.atleast_1d(ctx.beta if betas is None else np.asarray(betas, dtype=float))
    cs = np.atleast_1d(ctx.c if cs is None else np.asarray(cs, dtype=float))
    if betas.shape != cs.shape:
        betas, cs = np.broadcast_arrays(betas, cs)
    x, m = _exponents(ctx)
    ts = np.linspace(0.0, ctx.T, n_steps + 1)
    hstep = ctx.T / n_steps
    n_draws = betas.shape[0]
    A = np.zeros(n_steps + 1)
    D = np.zeros((n_draws, n_steps + 1))
    B = np.zeros((n_draws, n_steps + 1))

    def rhs(t, a, d, b):
        da = -x * a - 1.0
        dd = -x * d + 2.0 * np.exp(betas * t)
        db = -m * b - 2.0 * cs * a - cs * d
        return da, dd, db

    # integrate backward from T to 0
    for k in range(n_steps, 0, -1):
        t = ts[k]
        a, d, b = A[k], D[:, k], B[:, k]
        h = -hstep
        k1 = rhs(t, a, d, b)
        k2 = rhs(t + h / 2, a + h / 2 * k1[0], d + h / 2 * k1[1], b + h / 2 * k1[2])
        k3 = rhs(t + h / 2, a + h / 2 * k2[0], d + h / 2 * k2[1], b + h / 2 * k2[2])
        k4 = rhs(t + h, a + h * k3[0], d + h * k3[1], b + h * k3[2])
        A[k - 1] = a + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        D[:, k - 1] = d + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        B[:, k - 1] = b + h / 6 * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2])
    return ts, A, D, B
