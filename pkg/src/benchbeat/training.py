"""Tracking objectives, exact reverse-mode gradients through the wealth
recursion and the neural policy, and an Adam training loop.

The gradient is computed with an adjoint sweep: a single backward pass over
the rebalance dates propagates dLoss/dW(t_j) while accumulating parameter
gradients from each period's policy evaluation. Piecewise branches (the
shortfall hinge, the short-position premium indicator, the insolvency
overlay) take the zero subgradient exactly at their kinks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backtest, lfnn

__all__ = [
    "ObjectiveSpec",
    "TrainConfig",
    "path_objective",
    "empirical_loss",
    "loss_gradient",
    "train",
    "adam_minimize",
]


@dataclass
class ObjectiveSpec:
    """Cumulative tracking objective.

    kind "CD": sum over t_0..t_N of (W - e^{beta t} What)^2.
    kind "CS": same sum with only the negative part squared, plus
    epsilon * W(T). beta is the annual outperformance target.
    """

    kind: str
    beta: float
    epsilon: float = 1e-4

    def __post_init__(self):
        if self.kind not in ("CD", "CS"):
            raise ValueError("kind must be 'CD' or 'CS'")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")


@dataclass
class TrainConfig:
    learning_rate: float = 5e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    n_iterations: int = 20_000
    minibatch: int = 1_000
    seed: int = 0
    clip_grad: float | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.minibatch < 1 or self.n_iterations < 1:
            raise ValueError("minibatch and n_iterations must be >= 1")


def _per_path_objective(wealth, benchmark, times, spec):
    """Vector of time-summed objective values, one per path."""
    target = np.exp(spec.beta * times) * benchmark
    d = wealth - target
    if spec.kind == "CD":
        vals = np.sum(d * d, axis=1)
    else:
        short = np.minimum(d, 0.0)
        vals = np.sum(short * short, axis=1) + spec.epsilon * wealth[:, -1]
    return vals


def path_objective(traj, spec):
    """Mean over paths of the time-summed tracking objective (reported units)."""
    return float(np.mean(_per_path_objective(traj.wealth, traj.benchmark, traj.times, spec)))


def empirical_loss(theta, scenarios, inv, obj, net_config, borrow_premium=0.0):
    """Mean path objective under the neural policy (reported units, not the
    internally normalized training loss)."""
    traj = backtest.run_policy(
        scenarios, inv, backtest.lfnn_policy(theta, net_config), borrow_premium=borrow_premium
    )
    return path_objective(traj, obj)


def _forward_with_cache(theta, net_config, returns, inv, benchmark, borrow_premium):
    """Wealth recursion under the neural policy, keeping what backward needs.

    Must stay step-for-step identical to backtest.run_policy with lfnn_policy.
    """
    n_sc, n_per, n_assets = returns.shape
    layers, w_out = lfnn.unpack_theta(theta, net_config)
    times = inv.times
    c_per = inv.injection * inv.dt
    fallback = np.zeros(n_assets)
    fallback[inv.fallback_asset] = 1.0

    w = np.empty((n_sc, n_per + 1))
    w[:, 0] = inv.w0
    ruined = np.zeros(n_sc, dtype=bool)
    cache = []
    for j in range(n_per):
        wj = w[:, j]
        x = lfnn.scale_features(times[j], wj, benchmark[:, j], net_config)
        acts = [x]
        a = x
        for wk, bk in layers:
            a = lfnn.sigmoid(a @ wk + bk)
            acts.append(a)
        o = a @ w_out
        z = lfnn.zeta(o, net_config)
        p = lfnn.varphi(z, wj, net_config)
        ruined = ruined | (wj < 0)
        if ruined.any():
            p = p.copy()
            p[ruined] = fallback
        r_eff = returns[:, j, :]
        if borrow_premium != 0.0:
            short = p < 0
            if short.any():
                r_eff = np.where(short, r_eff + borrow_premium * inv.dt, r_eff)
        gross = 1.0 + np.sum(p * r_eff, axis=1)
        w[:, j + 1] = wj * gross + c_per
        cache.append((acts, z, r_eff, gross, ruined.copy()))
    return w, cache, (layers, w_out)


def _softmax_backward(s, ds):
    """s = softmax(logits); returns dlogits."""
    inner = np.sum(ds * s, axis=1, keepdims=True)
    return s * (ds - inner)


def loss_gradient(theta, scenarios, inv, obj, net_config, borrow_premium=0.0):
    """(normalized loss, gradient) of empirical_loss / w0^2 at theta.

    The w0^2 normalization conditions the optimizer; it rescales the loss and
    gradient without moving the argmin. Exact on the smooth branch taken.
    """
    returns = scenarios.returns
    n_sc, n_per, n_assets = returns.shape
    if n_per != inv.n_periods:
        raise ValueError("scenario horizon does not match investment horizon")
    benchmark = backtest.run_benchmark(scenarios, inv)
    w, cache, (layers, w_out) = _forward_with_cache(
        theta, net_config, returns, inv, benchmark, borrow_premium
    )

    times = inv.times
    target = np.exp(obj.beta * times) * benchmark
    d = w - target
    if obj.kind == "CD":
        lprime = 2.0 * d
    else:
        lprime = 2.0 * np.minimum(d, 0.0)
        lprime[:, -1] += obj.epsilon
    loss = float(np.mean(_per_path_objective(w, benchmark, times, obj))) / inv.w0**2

    nl = net_config.n_long
    na = net_config.n_assets
    grads_w = [np.zeros_like(wk) for wk, _ in layers]
    grads_b = [np.zeros_like(bk) for _, bk in layers]
    grad_out = np.zeros_like(w_out)

    a_next = lprime[:, n_per].copy()  # dL/dW(t_N), per path
    for j in range(n_per - 1, -1, -1):
        acts, z, r_eff, gross, ruined = cache[j]
        wj = w[:, j]
        # upstream gradient into the allocation fractions
        u = (a_next * wj)[:, None] * r_eff
        u[ruined] = 0.0  # overlay branch: allocation constant, stop-gradient

        lev = z[:, na]
        dz = np.empty_like(z)
        dz[:, :nl] = u[:, :nl] * lev[:, None]
        dz[:, nl:na] = u[:, nl:na] * (1.0 - lev)[:, None]
        dz[:, na] = np.sum(u[:, :nl] * z[:, :nl], axis=1) - np.sum(
            u[:, nl:na] * z[:, nl:na], axis=1
        )

        do = np.empty((n_sc, na + 1))
        do[:, :nl] = _softmax_backward(z[:, :nl], dz[:, :nl])
        do[:, nl:na] = _softmax_backward(z[:, nl:na], dz[:, nl:na])
        sig = lev / net_config.p_max
        do[:, na] = dz[:, na] * net_config.p_max * sig * (1.0 - sig)

        grad_out += acts[-1].T @ do
        da = do @ w_out.T
        for k in range(len(layers) - 1, -1, -1):
            ak = acts[k + 1]
            ds = da * ak * (1.0 - ak)
            grads_w[k] += acts[k].T @ ds
            grads_b[k] += ds.sum(axis=0)
            da = ds @ layers[k][0].T
        # da is now dL/dx; channel 1 carries W_j / w0
        a_next = lprime[:, j] + a_next * gross + da[:, 1] / net_config.w0

    parts = []
    for k in range(len(layers)):
        parts.append(grads_w[k].ravel())
        parts.append(grads_b[k])
    parts.append(grad_out.ravel())
    grad = np.concatenate(parts) / (n_sc * inv.w0**2)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient")
    return loss, grad


def adam_minimize(fun, x0, config):
    """Adam with bias correction on fun(x, iteration) -> (value, gradient).

    Returns (best x observed, history of per-iteration values). Aborts with
    a diagnostic if the objective turns non-finite.
    """
    x = np.array(x0, dtype=float)
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    history = np.empty(config.n_iterations)
    best_val = np.inf
    best_x = x.copy()
    for it in range(config.n_iterations):
        val, g = fun(x, it)
        history[it] = val
        if not np.isfinite(val):
            err = RuntimeError(f"objective diverged (non-finite) at iteration {it}")
            err.history = history[: it + 1]
            raise err
        if val < best_val:
            best_val = val
            best_x = x.copy()
        if config.clip_grad is not None:
            norm = float(np.linalg.norm(g))
            if norm > config.clip_grad:
                g = g * (config.clip_grad / norm)
        m = config.beta1 * m + (1.0 - config.beta1) * g
        v = config.beta2 * v + (1.0 - config.beta2) * g * g
        mhat = m / (1.0 - config.beta1 ** (it + 1))
        vhat = v / (1.0 - config.beta2 ** (it + 1))
        x = x - config.learning_rate * mhat / (np.sqrt(vhat) + config.adam_eps)
    return best_x, history


@dataclass
class _Subsampled:
    """Minibatch view that still quacks like a ScenarioSet for the gradient."""

    returns: np.ndarray


def train(theta0, scenarios, inv, obj, net_config, config, borrow_premium=0.0):
    """Minibatch Adam on the normalized empirical loss.

    Minibatches are drawn without replacement per iteration from a generator
    seeded by config.seed, so (seed, config, scenarios) fixes theta* bitwise.
    Returns (best theta, per-iteration minibatch loss history).
    """
    n_sc = scenarios.returns.shape[0]
    if config.minibatch > n_sc:
        raise ValueError("minibatch larger than scenario count")
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed)]))

    def fun(theta, it):
        if config.minibatch == n_sc:
            batch = scenarios
        else:
            idx = rng.choice(n_sc, size=config.minibatch, replace=False)
            batch = _Subsampled(returns=scenarios.returns[idx])
        return loss_gradient(theta, batch, inv, obj, net_config, borrow_premium)

    return adam_minimize(fun, theta0, config)
