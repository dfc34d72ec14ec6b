"""Scenario sets and stationary (circular) block bootstrap resampling."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "ScenarioSet",
    "scenario_rng",
    "sample_blocksize",
    "stationary_block_bootstrap",
]


@dataclass
class ScenarioSet:
    """N_d x N x N_a array of per-period joint simple returns plus provenance.

    Regeneration with the same seed and source reproduces the array
    bit-for-bit; scenario i is independent of how many scenarios were
    requested (per-scenario RNG substreams).
    """

    returns: np.ndarray  # (n_scenarios, n_periods, n_assets)
    dt: float
    seed: int
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.returns = np.asarray(self.returns, dtype=float)
        if self.returns.ndim != 3:
            raise ValueError("returns must be (n_scenarios, n_periods, n_assets)")
        if np.any(self.returns <= -1.0):
            raise ValueError("scenario returns must be > -1")

    @property
    def n_scenarios(self):
        return self.returns.shape[0]

    @property
    def n_periods(self):
        return self.returns.shape[1]

    @property
    def n_assets(self):
        return self.returns.shape[2]

    def save(self, path):
        """Write <path>.npz (array) and <path>.json (metadata sidecar)."""
        path = Path(path)
        np.savez_compressed(path.with_suffix(".npz"), returns=self.returns)
        meta = {
            "n_scenarios": self.n_scenarios,
            "n_periods": self.n_periods,
            "n_assets": self.n_assets,
            "dt": self.dt,
            "seed": self.seed,
            "provenance": self.provenance,
        }
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2))

    @classmethod
    def load(cls, path):
        path = Path(path)
        arr = np.load(path.with_suffix(".npz"))["returns"]
        meta = json.loads(path.with_suffix(".json").read_text())
        return cls(returns=arr, dt=meta["dt"], seed=meta["seed"], provenance=meta["provenance"])


def scenario_rng(seed, index):
    """Independent substream for one scenario, stable under scenario count."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def sample_blocksize(rng, expected_blocksize):
    """Shifted-geometric block length: P(k) = q(1-q)^(k-1), q = 1/expected.

    expected_blocksize = 1 degenerates to constant blocks of one period
    (i.i.d. resampling).
    """
    if expected_blocksize < 1:
        raise ValueError("expected_blocksize must be >= 1")
    return int(rng.geometric(1.0 / expected_blocksize))


def _bootstrap_indices_circular(rng, n_source, n_periods, expected_blocksize):
    """One scenario's source-row indices: random starts, geometric blocks,
    circular wrap, final block truncated at the horizon."""
    idx = np.empty(n_periods, dtype=np.intp)
    filled = 0
    while filled < n_periods:
        start = int(rng.integers(0, n_source))
        size = min(sample_blocksize(rng, expected_blocksize), n_periods - filled)
        block = (start + np.arange(size)) % n_source
        idx[filled : filled + size] = block
        filled += size
    return idx


def _bootstrap_indices_segmented(rng, segments, n_periods, expected_blocksize):
    """Per-segment variant: pick a segment with probability proportional to
    its length, then circular-bootstrap a block within that segment."""
    lengths = np.array([b - a for a, b in segments], dtype=float)
    probs = lengths / lengths.sum()
    idx = np.empty(n_periods, dtype=np.intp)
    filled = 0
    while filled < n_periods:
        seg = int(rng.choice(len(segments), p=probs))
        a, b = segments[seg]
        n_seg = b - a
        start = int(rng.integers(0, n_seg))
        size = min(sample_blocksize(rng, expected_blocksize), n_periods - filled)
        block = a + (start + np.arange(size)) % n_seg
        idx[filled : filled + size] = block
        filled += size
    return idx


def stationary_block_bootstrap(
    table,
    n_scenarios,
    n_periods,
    expected_blocksize,
    seed,
    dt=1.0 / 12.0,
    per_segment=False,
):
    """Stationary block bootstrap of joint return rows.

    All asset columns of an output row come from the same source date. By
    default the source is treated as one concatenated series; with
    ``per_segment`` blocks never cross the recorded segment boundaries
    (circular within each segment).
    """
    source = np.asarray(table.returns if hasattr(table, "returns") else table, dtype=float)
    if source.ndim != 2 or source.shape[0] == 0:
        raise ValueError("source table must be a nonempty (n_dates, n_assets) array")
    if n_periods < 1:
        raise ValueError("n_periods must be >= 1")
    n_source = source.shape[0]
    segments = getattr(table, "segments", ((0, n_source),))
    out = np.empty((n_scenarios, n_periods, source.shape[1]))
    for i in range(n_scenarios):
        rng = scenario_rng(seed, i)
        if per_segment:
            idx = _bootstrap_indices_segmented(rng, segments, n_periods, expected_blocksize)
        else:
            idx = _bootstrap_indices_circular(rng, n_source, n_periods, expected_blocksize)
        out[i] = source[idx]
    return ScenarioSet(
        returns=out,
        dt=dt,
        seed=seed,
        provenance={
            "kind": "bootstrap",
            "expected_blocksize": expected_blocksize,
            "per_segment": bool(per_segment),
            "n_source_rows": n_source,
        },
    )
