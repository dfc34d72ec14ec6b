"""Strategy evaluation: empirical CDFs, partial stochastic dominance,
internal rate of return, Richardson extrapolation, and summary reports."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

__all__ = [
    "empirical_cdf",
    "partial_dominance",
    "irr",
    "irr_many",
    "richardson_extrapolate",
    "EvalReport",
    "report",
]

_FAN_LEVELS = (5, 20, 50, 80, 95)


def empirical_cdf(samples):
    """Right-continuous empirical CDF as a callable: value -> P(X <= value).

    Vectorized over query values; CDF(max sample) = 1.
    """
    samples = np.sort(np.asarray(samples, dtype=float))
    if samples.size == 0:
        raise ValueError("empty sample")
    n = samples.size

    def cdf(x):
        q = np.searchsorted(samples, np.asarray(x, dtype=float), side="right") / n
        return float(q) if np.isscalar(x) else q

    return cdf


def partial_dominance(samples_a, samples_b, p_lo=0.01, p_hi=0.99):
    """Partial first-order stochastic dominance of A over B.

    Compares F_A and F_B over the wealth interval spanned by the pooled
    sample's quantiles at levels (p_lo, p_hi). A dominates iff F_A <= F_B
    everywhere there, strictly somewhere. Returns a dict with ``dominates``
    and ``crossings`` (wealth values where F_A - F_B changes sign).
    """
    samples_a = np.asarray(samples_a, dtype=float)
    samples_b = np.asarray(samples_b, dtype=float)
    if samples_a.size == 0 or samples_b.size == 0:
        raise ValueError("empty sample")
    if not 0 <= p_lo < p_hi <= 1:
        raise ValueError("need 0 <= p_lo < p_hi <= 1")
    pooled = np.concatenate([samples_a, samples_b])
    w_lo, w_hi = np.quantile(pooled, [p_lo, p_hi], method="inverted_cdf")
    # the step functions only change at sample points; checking there suffices
    grid = np.unique(pooled)
    grid = grid[(grid >= w_lo) & (grid <= w_hi)]
    fa = empirical_cdf(samples_a)(grid)
    fb = empirical_cdf(samples_b)(grid)
    diff = fa - fb
    dominates = bool(np.all(diff <= 0) and np.any(diff < 0))
    sign = np.sign(diff)
    nz = sign != 0
    crossings = []
    if nz.any():
        s = sign[nz]
        g = grid[nz]
        flips = np.nonzero(s[1:] * s[:-1] < 0)[0]
        crossings = [float(g[i + 1]) for i in flips]
    return {"dominates": dominates, "crossings": crossings}


def _irr_residual(rate, w0, times, amounts, w_T, T):
    acc = w0 * (1.0 + rate) ** T
    for t, c in zip(times, amounts):
        acc += c * (1.0 + rate) ** (T - t)
    return acc - w_T


def irr(w0, injections, w_T, T, lo=-0.99, hi=10.0):
    """Annual internal rate of return by bisection.

    Solves w0(1+r)^T + sum_k c_k (1+r)^(T - t_k) = w_T for r on [lo, hi],
    to a residual of 1e-10 * w_T. ``injections`` is a list of (time, amount).
    """
    if w0 <= 0 or w_T <= 0:
        raise ValueError("w0 and w_T must be positive")
    times = np.array([t for t, _ in injections], dtype=float)
    amounts = np.array([c for _, c in injections], dtype=float)
    f_lo = _irr_residual(lo, w0, times, amounts, w_T, T)
    f_hi = _irr_residual(hi, w0, times, amounts, w_T, T)
    if f_lo * f_hi > 0:
        raise ValueError("IRR bracket does not contain a sign change")
    tol = 1e-10 * w_T
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = _irr_residual(mid, w0, times, amounts, w_T, T)
        if abs(f_mid) <= tol:
            return mid
        if f_lo * f_mid <= 0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    return 0.5 * (lo + hi)


def irr_many(w0, injections, terminal_wealths, T):
    """IRR per path; non-positive terminal wealth yields NaN."""
    out = np.full(len(terminal_wealths), np.nan)
    for i, w_T in enumerate(terminal_wealths):
        if w_T > 0:
            out[i] = irr(w0, injections, float(w_T), T)
    return out


def richardson_extrapolate(pairs):
    """First-order extrapolation to dt = 0 from (dt, value) pairs.

    Uses the two smallest dt: v0 = v2 + (v2 - v1) * dt2 / (dt1 - dt2) with
    dt2 < dt1. Exact for values affine in dt.
    """
    pairs = sorted(pairs, key=lambda p: p[0])
    if len(pairs) < 2:
        raise ValueError("need at least two (dt, value) pairs")
    (dt2, v2), (dt1, v1) = pairs[0], pairs[1]
    if dt1 == dt2:
        raise ValueError("duplicate dt values")
    return v2 + (v2 - v1) * dt2 / (dt1 - dt2)


@dataclass
class EvalReport:
    """Summary statistics for a set of strategies on one scenario set."""

    terminal: dict  # strategy -> {median, mean, std, p5}
    ratio_percentiles: dict  # strategy -> {level -> list over time}
    prob_outperform: dict  # strategy -> P(W(T) > What(T)), strict
    median_irr: dict
    objective: dict | None = None
    times: list = field(default_factory=list)

    def to_json(self, path=None):
        text = json.dumps(asdict(self), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def _nearest_rank(samples, levels):
    return np.quantile(samples, np.asarray(levels) / 100.0, method="inverted_cdf")


def report(trajectories, inv, objective_values=None):
    """Aggregate trajectories (dict: strategy name -> Trajectory) into an
    EvalReport. All trajectories must share the scenario set (same shape and
    benchmark paths)."""
    if not trajectories:
        raise ValueError("no trajectories")
    shapes = {t.wealth.shape for t in trajectories.values()}
    if len(shapes) != 1:
        raise ValueError("mismatched scenario counts across strategies")
    injections = [
        (float(t), inv.injection * inv.dt) for t in inv.times[1:]
    ]
    terminal, fans, probs, med_irr = {}, {}, {}, {}
    times = None
    for name, traj in trajectories.items():
        times = traj.times
        w_T = traj.wealth[:, -1]
        terminal[name] = {
            "median": float(np.median(w_T)),
            "mean": float(np.mean(w_T)),
            "std": float(np.std(w_T)),
            "p5": float(_nearest_rank(w_T, [5])[0]),
        }
        ratio = traj.wealth / traj.benchmark
        fans[name] = {
            str(lv): np.quantile(ratio, lv / 100.0, axis=0, method="inverted_cdf").tolist()
            for lv in _FAN_LEVELS
        }
        probs[name] = float(np.mean(w_T > traj.benchmark[:, -1]))
        rates = irr_many(inv.w0, injections, w_T, inv.T)
        med_irr[name] = float(np.nanmedian(rates)) if np.isfinite(rates).any() else float("nan")
    return EvalReport(
        terminal=terminal,
        ratio_percentiles=fans,
        prob_outperform=probs,
        median_irr=med_irr,
        objective=objective_values,
        times=list(map(float, times)),
    )
