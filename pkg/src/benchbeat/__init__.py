"""Beating a fixed-mix benchmark in high-inflation regimes: regime filtering,
bootstrap and jump-diffusion scenario generation, closed-form and neural
tracking policies, and evaluation metrics."""

from . import backtest, closed_form, jump_model, lfnn, market_data, metrics, scenarios, training

__version__ = "0.1.0"

__all__ = [
    "backtest",
    "closed_form",
    "jump_model",
    "lfnn",
    "market_data",
    "metrics",
    "scenarios",
    "training",
]
