"""Leverage-feasible neural network policy.

A shallow fully-connected trunk (sigmoid hidden layers, linear output with no
final bias) produces N_a + 1 raw outputs. The feasibility head splits them
into a softmax over long-only assets, a softmax over shortable assets, and a
sigmoid-scaled total-long fraction l <= p_max; the final allocation is
(l * long_weights, (1 - l) * short_weights) when wealth is non-negative, and
the basis vector of the least-risky shortable asset when it is negative.
Every parameter vector therefore maps to a feasible allocation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "LFNNConfig",
    "theta_size",
    "init_theta",
    "fnn_forward",
    "zeta",
    "varphi",
    "lfnn_forward",
    "scale_features",
    "save_theta",
    "load_theta",
]


@dataclass
class LFNNConfig:
    """Architecture and feature-scaling constants.

    The first ``n_long`` asset indices are long-only; the rest are shortable.
    Inputs are fed as (t/T, W/w0, What/w0).
    """

    n_assets: int
    n_long: int
    p_max: float
    hidden: tuple = (10,)
    T: float = 10.0
    w0: float = 100.0

    def __post_init__(self):
        if not 1 <= self.n_long < self.n_assets:
            raise ValueError("need 1 <= n_long < n_assets")
        if self.p_max < 1:
            raise ValueError("p_max must be >= 1")
        if not self.hidden:
            raise ValueError("need at least one hidden layer")
        self.hidden = tuple(int(h) for h in self.hidden)

    @property
    def layer_dims(self):
        return (3, *self.hidden, self.n_assets + 1)


def theta_size(config):
    dims = config.layer_dims
    n = 0
    for k in range(1, len(dims)):
        n += dims[k - 1] * dims[k]
        if k < len(dims) - 1:  # no bias on the linear output layer
            n += dims[k]
    return n


def init_theta(config, rng):
    """Small uniform init, U[-0.5/sqrt(fan_in), 0.5/sqrt(fan_in)], zero biases.

    Keeps the initial policy near the symmetric allocation.
    """
    dims = config.layer_dims
    parts = []
    for k in range(1, len(dims)):
        bound = 0.5 / np.sqrt(dims[k - 1])
        parts.append(rng.uniform(-bound, bound, size=dims[k - 1] * dims[k]))
        if k < len(dims) - 1:
            parts.append(np.zeros(dims[k]))
    return np.concatenate(parts)


def unpack_theta(theta, config):
    """-> (list of (W, b) hidden layers, final weight matrix)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (theta_size(config),):
        raise ValueError(
            f"theta length {theta.shape} does not match architecture "
            f"(expected {theta_size(config)})"
        )
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta contains non-finite entries")
    dims = config.layer_dims
    layers = []
    pos = 0
    for k in range(1, len(dims) - 1):
        n_in, n_out = dims[k - 1], dims[k]
        w = theta[pos : pos + n_in * n_out].reshape(n_in, n_out)
        pos += n_in * n_out
        b = theta[pos : pos + n_out]
        pos += n_out
        layers.append((w, b))
    n_in, n_out = dims[-2], dims[-1]
    w_out = theta[pos : pos + n_in * n_out].reshape(n_in, n_out)
    return layers, w_out


def sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def scale_features(t, w, w_hat, config):
    """Raw state (t, W, What) -> scaled feature rows (t/T, W/w0, What/w0)."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    w_hat = np.broadcast_to(np.asarray(w_hat, dtype=float), w.shape)
    x = np.empty((w.shape[0], 3))
    x[:, 0] = t / config.T
    x[:, 1] = w / config.w0
    x[:, 2] = w_hat / config.w0
    return x


def fnn_forward(x, theta, config):
    """Trunk forward pass on scaled features x (n, 3) -> raw outputs (n, N_a+1)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    layers, w_out = unpack_theta(theta, config)
    a = x
    for w, b in layers:
        a = sigmoid(a @ w + b)
    return a @ w_out


def zeta(o, config):
    """Raw outputs -> (long softmax, short softmax, leverage fraction).

    Output rows satisfy: first n_long entries sum to 1, next block sums to 1,
    last entry lies in (0, p_max).
    """
    o = np.atleast_2d(np.asarray(o, dtype=float))
    nl = config.n_long
    na = config.n_assets
    z = np.empty((o.shape[0], na + 1))
    z[:, :nl] = _softmax(o[:, :nl])
    z[:, nl:na] = _softmax(o[:, nl:na])
    z[:, na] = config.p_max * sigmoid(o[:, na])
    return z


def varphi(z, w, config):
    """Internal weights + leverage -> allocation fractions.

    Solvent rows (W >= 0): p_i = l * z_i for long assets, (1 - l) * z_i for
    shortable assets. Insolvent rows collapse to the basis vector of asset
    n_long + 1 (first shortable asset).
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    nl = config.n_long
    na = config.n_assets
    lev = z[:, na]
    p = np.empty((z.shape[0], na))
    p[:, :nl] = lev[:, None] * z[:, :nl]
    p[:, nl:] = (1.0 - lev)[:, None] * z[:, nl:na]
    insolvent = w < 0
    if insolvent.any():
        p[insolvent] = 0.0
        p[insolvent, nl] = 1.0
    return p


def lfnn_forward(t, w, w_hat, theta, config):
    """Full policy: raw state -> feasible allocation rows (n, N_a)."""
    x = scale_features(t, w, w_hat, config)
    o = fnn_forward(x, theta, config)
    return varphi(zeta(o, config), np.atleast_1d(np.asarray(w, dtype=float)), config)


def save_theta(path, theta, config):
    """theta as .npy with a JSON architecture sidecar; round trip is bit-exact."""
    path = Path(path)
    np.save(path.with_suffix(".npy"), np.asarray(theta, dtype=np.float64))
    arch = {
        "n_assets": config.n_assets,
        "n_long": config.n_long,
        "p_max": config.p_max,
        "hidden": list(config.hidden),
        "T": config.T,
        "w0": config.w0,
    }
    path.with_suffix(".json").write_text(json.dumps(arch, indent=2))


def load_theta(path):
    path = Path(path)
    theta = np.load(path.with_suffix(".npy"))
    arch = json.loads(path.with_suffix(".json").read_text())
    config = LFNNConfig(
        n_assets=arch["n_assets"],
        n_long=arch["n_long"],
        p_max=arch["p_max"],
        hidden=tuple(arch["hidden"]),
        T=arch["T"],
        w0=arch["w0"],
    )
    if theta.shape != (theta_size(config),):
        raise ValueError("checkpoint theta does not match its architecture header")
    return theta, config
