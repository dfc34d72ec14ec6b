"""Experiment driver.

Subcommands compose the pipeline from a single INI config file whose sections
mirror the library modules. Outputs are written under a directory addressed
by a hash of (config contents, seed) so runs with different settings can
never silently mix artifacts.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import backtest, closed_form, jump_model, lfnn, market_data, metrics, scenarios, training

__all__ = ["main", "ExperimentConfig", "load_config"]


class ConfigError(ValueError):
    """Carries the full list of validation failures."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class ExperimentConfig:
    """Validated view over the INI file plus the raw text (for hashing)."""

    def __init__(self, parser, text, path):
        self.parser = parser
        self.text = text
        self.path = path
        self.errors = []
        self._validate()
        if self.errors:
            raise ConfigError(self.errors)

    def _get(self, section, key, cast, default=None, required=False):
        try:
            if not self.parser.has_option(section, key):
                if required:
                    self.errors.append(f"[{section}] missing key {key!r}")
                return default
            return cast(self.parser.get(section, key))
        except ValueError:
            self.errors.append(f"[{section}] {key}: cannot parse as {cast.__name__}")
            return default

    def _floats(self, section, key, default=None):
        raw = self.parser.get(section, key, fallback=None)
        if raw is None:
            return default
        try:
            return [float(v) for v in raw.split(",")]
        except ValueError:
            self.errors.append(f"[{section}] {key}: expected comma-separated numbers")
            return default

    def _validate(self):
        p = self.parser
        g = self._get
        # market_data (optional unless filter is requested)
        self.csv_path = g("market_data", "csv", str)
        if self.csv_path is not None and not Path(self.csv_path).exists():
            self.errors.append(f"[market_data] csv: path {self.csv_path!r} does not exist")
        self.date_col = g("market_data", "date_col", str, "date")
        self.cpi_col = g("market_data", "cpi_col", str, "cpi")
        self.window_k = g("market_data", "window_k", int, 60)
        self.cutoff = g("market_data", "cutoff", float, 0.05)
        if self.window_k is not None and self.window_k < 1:
            self.errors.append("[market_data] window_k must be >= 1")

        self.scenario_kind = g("scenarios", "kind", str, "simulate")
        if self.scenario_kind not in ("simulate", "bootstrap"):
            self.errors.append("[scenarios] kind must be 'simulate' or 'bootstrap'")
        self.n_scenarios = g("scenarios", "n_scenarios", int, 10_000)
        self.expected_blocksize = g("scenarios", "expected_blocksize", float, 6.0)
        self.per_segment = g("scenarios", "per_segment", lambda s: s.lower() == "true", False)
        self.scenario_seed = g("scenarios", "seed", int, 1)
        if self.n_scenarios is not None and self.n_scenarios < 1:
            self.errors.append("[scenarios] n_scenarios must be >= 1")

        # jump_model: explicit arrays or the calibrated preset
        preset = g("jump_model", "preset", str, "high_inflation")
        if p.has_option("jump_model", "mu"):
            kw = {}
            for key in ("mu", "sigma", "lam", "nu", "iota", "varsigma"):
                kw[key] = self._floats("jump_model", key)
            kw["rho"] = g("jump_model", "rho", float, 0.0)
            kw["borrow_premium"] = g("jump_model", "borrow_premium", float, 0.0)
            try:
                self.jump_params = jump_model.JumpDiffusionParams(**kw)
            except (TypeError, ValueError) as exc:
                self.errors.append(f"[jump_model] invalid parameters: {exc}")
                self.jump_params = None
        elif preset == "high_inflation":
            self.jump_params = jump_model.calibrated_high_inflation_params()
        else:
            self.errors.append(f"[jump_model] unknown preset {preset!r}")
            self.jump_params = None

        self.w0 = g("backtest", "w0", float, 100.0)
        self.T = g("backtest", "T", float, 10.0)
        self.dt = g("backtest", "dt", float, 1.0 / 12.0)
        self.injection = g("backtest", "injection", float, 10.0)
        self.varrho_hat = g("backtest", "varrho_hat", float, 0.7)
        self.beta = g("backtest", "beta", float, 0.01)
        self.p_min = g("backtest", "p_min", float, 0.0)
        self.p_max = g("backtest", "p_max", float, 1.3)
        self.borrow_premium = g("backtest", "borrow_premium", float, 0.0)
        try:
            self.investment = backtest.InvestmentScenario(
                w0=self.w0,
                T=self.T,
                dt=self.dt,
                injection=self.injection,
                benchmark_weights=[self.varrho_hat, 1.0 - self.varrho_hat],
                beta=self.beta,
            )
        except (TypeError, ValueError) as exc:
            self.errors.append(f"[backtest] invalid scenario: {exc}")
            self.investment = None

        kind = g("training", "kind", str, "CD")
        eps = g("training", "epsilon", float, 1e-4)
        try:
            self.objective = training.ObjectiveSpec(kind=kind, beta=self.beta, epsilon=eps)
        except (TypeError, ValueError) as exc:
            self.errors.append(f"[training] invalid objective: {exc}")
            self.objective = None
        try:
            self.train_config = training.TrainConfig(
                learning_rate=g("training", "learning_rate", float, 5e-3),
                n_iterations=g("training", "n_iterations", int, 20_000),
                minibatch=g("training", "minibatch", int, 1_000),
                seed=g("training", "seed", int, 0),
            )
        except (TypeError, ValueError) as exc:
            self.errors.append(f"[training] invalid config: {exc}")
            self.train_config = None
        hidden = self._floats("training", "hidden", [10.0])
        try:
            self.net_config = lfnn.LFNNConfig(
                n_assets=2,
                n_long=1,
                p_max=self.p_max,
                hidden=tuple(int(h) for h in hidden),
                T=self.T,
                w0=self.w0,
            )
        except (TypeError, ValueError) as exc:
            self.errors.append(f"[training] invalid network: {exc}")
            self.net_config = None

        self.out_dir = g("output", "dir", str, "out")

    def artifact_dir(self, out_override=None, seed_override=None):
        """Content-addressed run directory under the output root."""
        seed = self.scenario_seed if seed_override is None else seed_override
        digest = hashlib.sha256(
            (self.text + f"\nseed={seed}").encode()
        ).hexdigest()[:12]
        root = Path(out_override or self.out_dir) / digest
        root.mkdir(parents=True, exist_ok=True)
        return root, seed


def load_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError([f"config file {path} does not exist"])
    text = path.read_text()
    parser = configparser.ConfigParser()
    parser.read_string(text)
    return ExperimentConfig(parser, text, path)


def closed_form_context(cfg):
    mom = jump_model.jump_moments(cfg.jump_params)
    return closed_form.ClosedFormContext(
        moments=mom,
        mu1=float(cfg.jump_params.mu[0]),
        mu2=float(cfg.jump_params.mu[1]),
        beta=cfg.beta,
        c=cfg.injection,
        T=cfg.T,
        varrho_hat=cfg.varrho_hat,
        p_min=cfg.p_min,
        p_max=cfg.p_max,
    )


def build_scenarios(cfg, seed, n_scenarios=None):
    n = cfg.n_scenarios if n_scenarios is None else n_scenarios
    if cfg.scenario_kind == "simulate":
        return jump_model.simulate_paths(
            cfg.jump_params, cfg.dt, cfg.investment.n_periods, n, seed
        )
    table = _filtered_table(cfg)
    return scenarios.stationary_block_bootstrap(
        table, n, cfg.investment.n_periods, cfg.expected_blocksize, seed,
        dt=cfg.dt, per_segment=cfg.per_segment,
    )


def _filtered_table(cfg):
    if cfg.csv_path is None:
        raise ConfigError(["[market_data] csv is required for bootstrap/filter runs"])
    nominal = market_data.load_return_table(cfg.csv_path, cfg.date_col, cfg.cpi_col)
    if nominal.cpi_return is None:
        raise ConfigError([f"[market_data] column {cfg.cpi_col!r} not found in csv"])
    levels = market_data.cpi_index_from_returns(nominal.cpi_return)
    mask = market_data.filter_high_inflation(levels[1:], cfg.window_k, cfg.cutoff)
    real = market_data.deflate(nominal)
    return market_data.extract_concatenate(real, mask)


def cmd_filter(cfg, args):
    nominal = market_data.load_return_table(cfg.csv_path, cfg.date_col, cfg.cpi_col)
    levels = market_data.cpi_index_from_returns(nominal.cpi_return)
    mask = market_data.filter_high_inflation(levels[1:], cfg.window_k, cfg.cutoff)
    spans = market_data.regime_spans(mask)
    out, _ = cfg.artifact_dir(args.out, args.seed)
    with open(out / "regime_mask.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["date", "flag"])
        for d, f in zip(nominal.dates, mask.flags):
            wr.writerow([d, int(f)])
    summary = []
    log_cpi = np.log1p(nominal.cpi_return)
    for a, b in spans:
        summary.append({
            "start": nominal.dates[a],
            "end": nominal.dates[b - 1],
            "months": b - a,
            "avg_annualized_inflation": float(log_cpi[a:b].mean() * 12.0),
        })
    (out / "regimes.json").write_text(json.dumps(summary, indent=2))
    print(f"{len(spans)} regime(s), {int(mask.flags.sum())} flagged months -> {out}")
    return 0


def cmd_scenarios(cfg, args):
    out, seed = cfg.artifact_dir(args.out, args.seed)
    sset = build_scenarios(cfg, seed)
    sset.save(out / "scenarios")
    print(f"{sset.n_scenarios} x {sset.n_periods} x {sset.n_assets} scenarios -> {out}")
    return 0


def cmd_train(cfg, args):
    out, seed = cfg.artifact_dir(args.out, args.seed)
    sset = build_scenarios(cfg, seed)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.train_config.seed, 1]))
    theta0 = lfnn.init_theta(cfg.net_config, rng)
    theta, history = training.train(
        theta0, sset, cfg.investment, cfg.objective, cfg.net_config, cfg.train_config,
        borrow_premium=cfg.borrow_premium,
    )
    lfnn.save_theta(out / "checkpoint", theta, cfg.net_config)
    with open(out / "loss_history.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["iteration", "minibatch_loss"])
        for i, v in enumerate(history):
            wr.writerow([i, repr(float(v))])
    print(f"trained {len(history)} iterations, best loss {history.min():.6g} -> {out}")
    return 0


def _strategy_trajectory(cfg, name, sset):
    inv = cfg.investment
    if name == "benchmark":
        policy = backtest.constant_mix_policy(inv.benchmark_weights)
    elif name == "clipped":
        policy = backtest.clipped_form_policy(closed_form_context(cfg))
    else:
        theta, net_config = lfnn.load_theta(name)
        policy = backtest.lfnn_policy(theta, net_config)
    return backtest.run_policy(sset, inv, policy, borrow_premium=cfg.borrow_premium)


def _figure_tables(out, name, traj, cfg):
    """CSV backing for the standard figures: terminal-wealth CDF points,
    wealth-ratio percentile fan, allocation vs tracking ratio scatter."""
    w_T = np.sort(traj.wealth[:, -1])
    n = len(w_T)
    with open(out / f"cdf_{name}.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["wealth", "probability"])
        for i, v in enumerate(w_T):
            wr.writerow([repr(float(v)), (i + 1) / n])
    ratio = traj.wealth / traj.benchmark
    with open(out / f"ratio_fan_{name}.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["time"] + [f"p{lv}" for lv in (5, 20, 50, 80, 95)])
        fan = {
            lv: np.quantile(ratio, lv / 100.0, axis=0, method="inverted_cdf")
            for lv in (5, 20, 50, 80, 95)
        }
        for k, t in enumerate(traj.times):
            wr.writerow([float(t)] + [repr(float(fan[lv][k])) for lv in (5, 20, 50, 80, 95)])
    if traj.allocations is not None:
        target = np.exp(cfg.beta * traj.times[None, :-1]) * traj.benchmark[:, :-1]
        track = traj.wealth[:, :-1] / target
        with open(out / f"allocation_scatter_{name}.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["tracking_ratio", "stock_fraction"])
            # thin to keep the table a scatter, not a dump
            flat_t = track.ravel()[::17]
            flat_p = traj.allocations[:, :, 0].ravel()[::17]
            for tr, pv in zip(flat_t, flat_p):
                wr.writerow([repr(float(tr)), repr(float(pv))])


def cmd_evaluate(cfg, args):
    out, seed = cfg.artifact_dir(args.out, args.seed)
    sset = build_scenarios(cfg, seed)
    traj = _strategy_trajectory(cfg, args.strategy, sset)
    obj = training.path_objective(traj, cfg.objective)
    name = Path(args.strategy).stem if args.strategy not in ("benchmark", "clipped") else args.strategy
    rep = metrics.report({name: traj}, cfg.investment, objective_values={name: obj, "dt": cfg.dt})
    rep.to_json(out / f"evaluate_{name}.json")
    _figure_tables(out, name, traj, cfg)
    print(f"{name}: objective {obj:.4f} at dt={cfg.dt:.6g} -> {out}")
    return 0


def cmd_extrapolate(cfg, args):
    pairs = []
    for path in args.reports:
        doc = json.loads(Path(path).read_text())
        obj = doc["objective"]
        dt = obj["dt"]
        vals = [v for k, v in obj.items() if k != "dt"]
        if len(vals) != 1:
            raise ConfigError([f"{path}: expected exactly one strategy objective"])
        pairs.append((float(dt), float(vals[0])))
    v0 = metrics.richardson_extrapolate(pairs)
    print(f"extrapolated objective at dt=0: {v0:.6f}")
    return 0


def cmd_report(cfg, args):
    out, seed = cfg.artifact_dir(args.out, args.seed)
    sset = build_scenarios(cfg, seed)
    names = ["benchmark", "clipped"] + ([args.checkpoint] if args.checkpoint else [])
    trajs, objs = {}, {"dt": cfg.dt}
    for name in names:
        key = Path(name).stem if name not in ("benchmark", "clipped") else name
        trajs[key] = _strategy_trajectory(cfg, name, sset)
        objs[key] = training.path_objective(trajs[key], cfg.objective)
    rep = metrics.report(trajs, cfg.investment, objective_values=objs)
    rep.to_json(out / "report.json")
    for key, traj in trajs.items():
        _figure_tables(out, key, traj, cfg)
    print(rep.to_json())
    return 0


def _cap_threads(n):
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ[var] = str(n)


def main(argv=None):
    ap = argparse.ArgumentParser(prog="benchbeat", description=__doc__)
    ap.add_argument("--config", required=True, help="INI experiment file")
    ap.add_argument("--seed", type=int, default=None, help="override scenario seed")
    ap.add_argument("--threads", type=int, default=None, help="cap worker threads")
    ap.add_argument("--out", default=None, help="override output root directory")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("filter")
    sub.add_parser("scenarios")
    sub.add_parser("train")
    ev = sub.add_parser("evaluate")
    ev.add_argument("strategy", help="'benchmark', 'clipped', or a checkpoint path")
    ex = sub.add_parser("extrapolate")
    ex.add_argument("reports", nargs="+", help="evaluate_*.json files at different dt")
    rp = sub.add_parser("report")
    rp.add_argument("--checkpoint", default=None)
    args = ap.parse_args(argv)
    if args.threads:
        _cap_threads(args.threads)
    try:
        cfg = load_config(args.config)
        handler = {
            "filter": cmd_filter,
            "scenarios": cmd_scenarios,
            "train": cmd_train,
            "evaluate": cmd_evaluate,
            "extrapolate": cmd_extrapolate,
            "report": cmd_report,
        }[args.command]
        return handler(cfg, args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
