"""Correlated double-exponential jump-diffusion simulation and jump moments.

Each asset follows dS/S = (mu - lambda*kappa) dt + sigma dZ + jump terms,
with log jump sizes drawn from an asymmetric double-exponential: up-jumps
Exp(rate iota) with probability nu, down-jumps -Exp(rate varsigma) otherwise.
Brownian shocks are correlated across the two assets; jump arrivals are
independent across assets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenarios import ScenarioSet, scenario_rng

__all__ = [
    "JumpDiffusionParams",
    "JumpMoments",
    "jump_moments",
    "sample_jump_multiplier",
    "simulate_paths",
    "calibrated_high_inflation_params",
]


@dataclass
class JumpDiffusionParams:
    """Per-asset (mu, sigma, lambda, nu, iota, varsigma) plus correlation rho.

    ``iota`` may be NaN for assets with nu = 0 (no up-jumps). ``borrow_premium``
    is carried as configuration for the backtest; the simulator itself models
    instrument returns only.
    """

    mu: np.ndarray
    sigma: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    iota: np.ndarray
    varsigma: np.ndarray
    rho: float
    borrow_premium: float = 0.0

    def __post_init__(self):
        for name in ("mu", "sigma", "lam", "nu", "iota", "varsigma"):
            setattr(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        n = len(self.mu)
        for name in ("sigma", "lam", "nu", "iota", "varsigma"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match mu")
        if np.any(self.sigma < 0) or np.any(self.lam < 0):
            raise ValueError("sigma and lambda must be >= 0")
        if np.any((self.nu < 0) | (self.nu > 1)):
            raise ValueError("nu must lie in [0, 1]")
        if abs(self.rho) > 1:
            raise ValueError("|rho| must be <= 1")
        up = self.nu > 0
        if np.any(up & ~(self.iota > 2)):
            raise ValueError("iota must be > 2 when nu > 0 (finite second jump moment)")
        if np.any(self.varsigma <= 0):
            raise ValueError("varsigma must be > 0")

    @property
    def n_assets(self):
        return len(self.mu)


def calibrated_high_inflation_params():
    """Two-asset parameters calibrated to deflated stock / 30-day T-bill
    indexes over the concatenated historical high-inflation months."""
    return JumpDiffusionParams(
        mu=[0.051, -0.014],
        sigma=[0.146, 0.017],
        lam=[0.178, 0.321],
        nu=[0.2, 0.0],
        iota=[7.13, math.nan],
        varsigma=[7.33, 44.48],
        rho=0.14,
    )


@dataclass
class JumpMoments:
    """Jump-moment auxiliaries: kappa = E[xi-1], kappa2 = E[(xi-1)^2],
    sigma2sq = sigma^2 + lambda*kappa2, and (for two assets) the derived
    scalars vartheta, gamma, phi, eta used by the closed-form control."""

    kappa: np.ndarray
    kappa2: np.ndarray
    sigma2sq: np.ndarray
    vartheta: float | None = None
    gamma: float | None = None
    phi: float | None = None
    eta: float | None = None

    def __post_init__(self):
        if np.any(self.kappa2 < 0):
            raise ValueError("kappa2 must be >= 0")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive (diffusion/jump variances too degenerate)")


def _xi_moments(nu, iota, varsigma):
    """E[xi] and E[xi^2] for xi = e^y, y double-exponential."""
    up1 = nu * iota / (iota - 1.0) if nu > 0 else 0.0
    up2 = nu * iota / (iota - 2.0) if nu > 0 else 0.0
    e1 = up1 + (1.0 - nu) * varsigma / (varsigma + 1.0)
    e2 = up2 + (1.0 - nu) * varsigma / (varsigma + 2.0)
    return e1, e2


def jump_moments(params):
    """Compute JumpMoments from model parameters.

    For assets with nu > 0, iota <= 2 makes E[xi^2] infinite and is rejected.
    """
    n = params.n_assets
    kappa = np.empty(n)
    kappa2 = np.empty(n)
    for i in range(n):
        if params.nu[i] > 0 and not params.iota[i] > 2:
            raise ValueError(f"infinite second jump moment for asset {i} (iota <= 2)")
        e1, e2 = _xi_moments(params.nu[i], params.iota[i], params.varsigma[i])
        kappa[i] = e1 - 1.0
        kappa2[i] = e2 - 2.0 * e1 + 1.0
    sigma2sq = params.sigma**2 + params.lam * kappa2
    vartheta = gamma = phi = eta = None
    if n == 2:
        s1, s2 = params.sigma
        cross = s1 * s2 * params.rho
        vartheta = cross - sigma2sq[1]
        gamma = sigma2sq[0] + sigma2sq[1] - 2.0 * cross
        dmu = params.mu[0] - params.mu[1]
        phi = dmu * (dmu + vartheta) / gamma
        eta = (dmu + vartheta) ** 2 / gamma - sigma2sq[1]
    return JumpMoments(
        kappa=kappa, kappa2=kappa2, sigma2sq=sigma2sq,
        vartheta=vartheta, gamma=gamma, phi=phi, eta=eta,
    )


def sample_log_jump(rng, nu, iota, varsigma, size):
    """Draw log jump sizes y: +Exp(rate iota) w.p. nu, -Exp(rate varsigma) else."""
    y = -rng.exponential(1.0 / varsigma, size=size)
    if nu > 0:
        up = rng.random(size) < nu
        n_up = int(up.sum())
        if n_up:
            y[up] = rng.exponential(1.0 / iota, size=n_up)
    return y


def sample_jump_multiplier(rng, nu, iota, varsigma, size=None):
    """Jump multipliers xi = e^y (always positive)."""
    scalar = size is None
    y = sample_log_jump(rng, nu, iota, varsigma, 1 if scalar else size)
    xi = np.exp(y)
    return float(xi[0]) if scalar else xi


def _period_jump_log_sums(rng, lam_dt, nu, iota, varsigma, n_periods):
    """Sum of log jump sizes per period, with Poisson(lam_dt) jumps each."""
    counts = rng.poisson(lam_dt, size=n_periods)
    total = int(counts.sum())
    if total == 0:
        return np.zeros(n_periods)
    ys = sample_log_jump(rng, nu, iota, varsigma, total)
    sums = np.zeros(n_periods)
    np.add.at(sums, np.repeat(np.arange(n_periods), counts), ys)
    return sums


def simulate_paths(params, dt, n_periods, n_scenarios, seed):
    """Exact-scheme simulation: per-period gross return is the closed
    solution exp((mu - lam*kappa - sigma^2/2) dt + sigma sqrt(dt) Z) * prod(xi).

    Correlation enters through Z2 = rho*Z1 + sqrt(1-rho^2)*Zperp; jumps are
    independent across assets. Returns are stored as simple returns.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    mom = jump_moments(params)
    n_assets = params.n_assets
    drift = (params.mu - params.lam * mom.kappa - 0.5 * params.sigma**2) * dt
    vol = params.sigma * math.sqrt(dt)
    rho = params.rho
    root = math.sqrt(max(0.0, 1.0 - rho * rho))
    out = np.empty((n_scenarios, n_periods, n_assets))
    for j in range(n_scenarios):
        rng = scenario_rng(seed, j)
        z = rng.standard_normal((n_periods, n_assets))
        if n_assets == 2:
            z[:, 1] = rho * z[:, 0] + root * z[:, 1]
        log_r = drift + vol * z
        for i in range(n_assets):
            if params.lam[i] > 0:
                log_r[:, i] += _period_jump_log_sums(
                    rng, params.lam[i] * dt, params.nu[i], params.iota[i],
                    params.varsigma[i], n_periods,
                )
        out[j] = np.expm1(log_r)
    return ScenarioSet(
        returns=out,
        dt=dt,
        seed=seed,
        provenance={"kind": "simulated", "model": "double-exponential jump-diffusion"},
    )
