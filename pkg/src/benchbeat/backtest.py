"""Discrete wealth recursion for an actively managed portfolio versus a
fixed-mix benchmark on the same scenario set.

Both portfolios start at w0 and receive the same cash injections at the end
of every period (t_1, ..., t_N; none at t_0). Allocations are decided at the
start of each period from the post-injection state. Once the active portfolio
goes insolvent (W < 0) it is parked entirely in the designated fallback asset
for the rest of the horizon, letting debt accrue at that asset's return.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import closed_form, lfnn

__all__ = [
    "InvestmentScenario",
    "Trajectory",
    "run_benchmark",
    "run_policy",
    "constant_mix_policy",
    "clipped_form_policy",
    "lfnn_policy",
]


@dataclass
class InvestmentScenario:
    """Horizon, cash schedule, and benchmark definition.

    ``injection`` is the annual cash-injection rate (wealth units / year);
    each period receives injection * dt. ``benchmark_weights`` is the
    fixed mix (must sum to 1). ``fallback_asset`` is where an insolvent
    portfolio is parked.
    """

    w0: float
    T: float
    dt: float
    injection: float
    benchmark_weights: np.ndarray
    beta: float = 0.0
    fallback_asset: int = 1

    def __post_init__(self):
        if self.w0 <= 0:
            raise ValueError("w0 must be positive")
        if self.T <= 0 or self.dt <= 0:
            raise ValueError("T and dt must be positive")
        n = self.T / self.dt
        if abs(n - round(n)) > 1e-9:
            raise ValueError("T must be an integer number of periods")
        self.benchmark_weights = np.asarray(self.benchmark_weights, dtype=float)
        if abs(self.benchmark_weights.sum() - 1.0) > 1e-12:
            raise ValueError("benchmark weights must sum to 1")

    @property
    def n_periods(self):
        return int(round(self.T / self.dt))

    @property
    def times(self):
        """Rebalancing/observation times t_0, ..., t_N."""
        return np.arange(self.n_periods + 1) * self.dt


@dataclass
class Trajectory:
    """Simulated wealth paths and the allocations that produced them."""

    times: np.ndarray  # (N+1,)
    wealth: np.ndarray  # (n_scenarios, N+1), post-injection at each time
    benchmark: np.ndarray  # (n_scenarios, N+1)
    allocations: np.ndarray | None = None  # (n_scenarios, N, n_assets)


def run_benchmark(scenarios, inv):
    """Fixed-mix benchmark wealth, (n_scenarios, N+1). Always solvent."""
    r = scenarios.returns
    n_sc, n_per, _ = r.shape
    if n_per != inv.n_periods:
        raise ValueError("scenario horizon does not match investment horizon")
    c_per = inv.injection * inv.dt
    w = np.empty((n_sc, n_per + 1))
    w[:, 0] = inv.w0
    port_r = r @ inv.benchmark_weights
    for j in range(n_per):
        w[:, j + 1] = w[:, j] * (1.0 + port_r[:, j]) + c_per
    return w


def run_policy(scenarios, inv, policy, borrow_premium=0.0, benchmark=None):
    """Run an allocation policy against every scenario.

    ``policy(t, w, w_hat) -> (n, n_assets)`` fractions of wealth. Short
    positions (p < 0) earn r + borrow_premium * dt instead of r, charging the
    premium to the short seller. The insolvency overlay replaces the policy's
    output with the fallback basis vector from the first period at which
    wealth is negative, permanently.
    """
    r = scenarios.returns
    n_sc, n_per, n_assets = r.shape
    if n_per != inv.n_periods:
        raise ValueError("scenario horizon does not match investment horizon")
    if benchmark is None:
        benchmark = run_benchmark(scenarios, inv)
    c_per = inv.injection * inv.dt
    times = inv.times
    w = np.empty((n_sc, n_per + 1))
    w[:, 0] = inv.w0
    alloc = np.empty((n_sc, n_per, n_assets))
    fallback = np.zeros(n_assets)
    fallback[inv.fallback_asset] = 1.0
    ruined = np.zeros(n_sc, dtype=bool)
    for j in range(n_per):
        wj = w[:, j]
        p = np.asarray(policy(times[j], wj, benchmark[:, j]), dtype=float)
        if not np.all(np.isfinite(p)):
            bad = int(np.argwhere(~np.isfinite(p).all(axis=1))[0, 0])
            raise ValueError(f"policy returned non-finite allocation at t={times[j]}, scenario {bad}")
        ruined |= wj < 0  # overlay is permanent once triggered
        if ruined.any():
            p = p.copy()
            p[ruined] = fallback
        alloc[:, j] = p
        r_eff = r[:, j, :]
        if borrow_premium != 0.0:
            short = p < 0
            if short.any():
                r_eff = np.where(short, r_eff + borrow_premium * inv.dt, r_eff)
        w[:, j + 1] = wj * (1.0 + np.sum(p * r_eff, axis=1)) + c_per
    return Trajectory(times=times, wealth=w, benchmark=benchmark, allocations=alloc)


def constant_mix_policy(weights):
    """Rebalance to fixed fractions every period (sum to 1)."""
    weights = np.asarray(weights, dtype=float)
    if abs(weights.sum() - 1.0) > 1e-12:
        raise ValueError("weights must sum to 1")

    def policy(t, w, w_hat):
        return np.broadcast_to(weights, (len(np.atleast_1d(w)), len(weights)))

    return policy


def clipped_form_policy(ctx):
    """Two-asset policy from the clipped closed-form stock fraction."""

    def policy(t, w, w_hat):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        p1 = np.empty_like(w)
        ok = w != 0
        p1[~ok] = 0.0  # wealth exactly zero: control undefined, park in bond
        if ok.any():
            p1[ok] = closed_form.clipped_control(ctx, t, w[ok], np.atleast_1d(w_hat)[ok])
        return np.stack([p1, 1.0 - p1], axis=1)

    return policy


def lfnn_policy(theta, config):
    """Neural policy wrapper; feasibility is built into the network head."""

    def policy(t, w, w_hat):
        return lfnn.lfnn_forward(t, w, w_hat, theta, config)

    return policy
