import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from benchbeat import backtest as bt
from benchbeat import metrics as mt


class TestECDF:
    def test_counting(self):
        cdf = mt.empirical_cdf([1.0, 2.0, 3.0, 4.0])
        assert cdf(0.5) == 0.0
        assert cdf(1.0) == 0.25  # right-continuous: includes the point
        assert cdf(2.5) == 0.5
        assert cdf(4.0) == 1.0
        assert cdf(99.0) == 1.0

    def test_vectorized_and_monotone(self):
        rng = np.random.default_rng(0)
        cdf = mt.empirical_cdf(rng.normal(size=500))
        xs = np.linspace(-4, 4, 200)
        vals = cdf(xs)
        assert np.all(np.diff(vals) >= 0)
        assert vals[0] == 0.0 and vals[-1] == 1.0

    def test_empty(self):
        with pytest.raises(ValueError):
            mt.empirical_cdf([])


class TestPartialDominance:
    def test_shifted_sample_dominates(self):
        rng = np.random.default_rng(1)
        b = rng.normal(100, 10, size=2000)
        out = mt.partial_dominance(b + 5.0, b)
        assert out["dominates"] and out["crossings"] == []

    def test_identical_samples_do_not_dominate(self):
        a = np.arange(100.0)
        out = mt.partial_dominance(a, a)
        assert not out["dominates"]

    def test_tail_violation_outside_band_is_ignored(self):
        # A beats B everywhere except in the bottom 1% tail; partial
        # dominance over the (0.01, 0.99) band still holds
        b = np.linspace(100.0, 200.0, 1000)
        a = b + 5.0
        a[:3] = 50.0  # catastrophic left tail, below the 1% pooled quantile
        out = mt.partial_dominance(a, b, p_lo=0.02, p_hi=0.99)
        assert out["dominates"]
        out_full = mt.partial_dominance(a, b, p_lo=0.0, p_hi=1.0)
        assert not out_full["dominates"]

    def test_constructed_crossing_location(self):
        # A is better in the upper half, worse in the lower half; the CDFs
        # cross once, near the common median 100
        a = np.concatenate([np.linspace(80, 99, 500), np.linspace(101, 130, 500)])
        b = np.concatenate([np.linspace(90, 99, 500), np.linspace(101, 120, 500)])
        out = mt.partial_dominance(a, b)
        assert not out["dominates"]
        assert len(out["crossings"]) >= 1
        assert any(95 <= c <= 105 for c in out["crossings"])

    def test_bad_band(self):
        with pytest.raises(ValueError):
            mt.partial_dominance([1.0], [2.0], p_lo=0.5, p_hi=0.5)


class TestIRR:
    def test_pure_growth_doubling(self):
        # no injections, wealth doubles over 10 years: r = 2^(1/10) - 1
        r = mt.irr(100.0, [], 200.0, 10.0)
        assert r == pytest.approx(2 ** 0.1 - 1.0, abs=1e-10)

    def test_defining_equation_residual(self):
        injections = [(t, 10.0) for t in np.arange(1.0, 11.0)]
        w_T = 350.0
        r = mt.irr(100.0, injections, w_T, 10.0)
        acc = 100.0 * (1 + r) ** 10 + sum(10.0 * (1 + r) ** (10 - t) for t, _ in injections)
        assert abs(acc - w_T) <= 1e-10 * w_T  # solver's advertised residual

    def test_known_compound_rate_with_injections(self):
        # grow everything at 5%: the IRR must recover exactly 5%
        rate = 0.05
        injections = [(t, 10.0) for t in np.arange(0.5, 10.5, 0.5)]
        w_T = 100.0 * 1.05**10 + sum(10.0 * 1.05 ** (10 - t) for t, _ in injections)
        assert mt.irr(100.0, injections, w_T, 10.0) == pytest.approx(rate, abs=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(120.0, 5000.0), st.floats(120.0, 5000.0))
    def test_monotone_in_terminal_wealth(self, w1, w2):
        injections = [(t, 10.0) for t in np.arange(1.0, 11.0)]
        r1 = mt.irr(100.0, injections, w1, 10.0)
        r2 = mt.irr(100.0, injections, w2, 10.0)
        if abs(w1 - w2) < 1e-3:
            return  # inside the bisection tolerance; ordering not guaranteed
        if w1 < w2:
            assert r1 < r2
        else:
            assert r1 > r2

    def test_negative_rate_bracket(self):
        r = mt.irr(100.0, [], 50.0, 10.0)
        assert r == pytest.approx(0.5 ** 0.1 - 1.0, abs=1e-10)

    def test_nonpositive_inputs(self):
        with pytest.raises(ValueError):
            mt.irr(100.0, [], -5.0, 10.0)

    def test_irr_many_nan_for_ruined(self):
        out = mt.irr_many(100.0, [], np.array([200.0, -10.0]), 10.0)
        assert out[0] == pytest.approx(2 ** 0.1 - 1.0, abs=1e-9)
        assert np.isnan(out[1])


class TestRichardson:
    def test_two_point_hand_values(self):
        # quarterly -> monthly: the correction factor is (1/12)/(1/4 - 1/12) = 1/2
        assert mt.richardson_extrapolate([(0.25, 479.0), (1 / 12, 467.0)]) == pytest.approx(461.0)
        assert mt.richardson_extrapolate([(0.25, 476.0), (1 / 12, 464.0)]) == pytest.approx(458.0)

    def test_uses_two_smallest_dt(self):
        v = mt.richardson_extrapolate([(1.0, 100.0), (0.5, 90.0), (0.25, 85.0)])
        assert v == pytest.approx(80.0)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(-100, 100), st.floats(-50, 50))
    def test_exact_for_affine_in_dt(self, v0, slope):
        pairs = [(dt, v0 + slope * dt) for dt in (1.0, 0.5, 0.125)]
        assert mt.richardson_extrapolate(pairs) == pytest.approx(v0, abs=1e-8 * (1 + abs(v0)))

    def test_degenerate_inputs(self):
        with pytest.raises(ValueError):
            mt.richardson_extrapolate([(0.5, 1.0)])
        with pytest.raises(ValueError):
            mt.richardson_extrapolate([(0.5, 1.0), (0.5, 2.0)])


class TestReport:
    def make_traj(self, wealth, benchmark):
        wealth = np.asarray(wealth, dtype=float)
        n = wealth.shape[1]
        return bt.Trajectory(
            times=np.arange(n, dtype=float),
            wealth=np.asarray(wealth, dtype=float),
            benchmark=np.asarray(benchmark, dtype=float),
        )

    def test_two_path_hand_case(self):
        inv = bt.InvestmentScenario(
            w0=100.0, T=2.0, dt=1.0, injection=0.0, benchmark_weights=[1.0, 0.0]
        )
        traj = self.make_traj(
            [[100, 105, 110], [100, 95, 90]], [[100, 100, 100], [100, 100, 100]]
        )
        rep = mt.report({"s": traj}, inv)
        assert rep.prob_outperform["s"] == 0.5
        assert rep.terminal["s"]["median"] == 100.0  # midpoint of {90, 110}
        assert rep.terminal["s"]["mean"] == 100.0
        assert rep.ratio_percentiles["s"]["50"][-1] == pytest.approx(0.9)
        # per-path IRRs are (1.1)^(1/2)-1 and (0.9)^(1/2)-1; the median of
        # two samples is their midpoint
        expect = (math.sqrt(1.1) + math.sqrt(0.9)) / 2.0 - 1.0
        assert rep.median_irr["s"] == pytest.approx(expect, abs=1e-9)

    def test_strict_outperformance(self):
        inv = bt.InvestmentScenario(
            w0=100.0, T=1.0, dt=1.0, injection=0.0, benchmark_weights=[1.0, 0.0]
        )
        traj = self.make_traj([[100, 100]], [[100, 100]])
        rep = mt.report({"s": traj}, inv)
        assert rep.prob_outperform["s"] == 0.0  # ties do not count

    def test_mismatched_shapes_rejected(self):
        inv = bt.InvestmentScenario(
            w0=100.0, T=1.0, dt=1.0, injection=0.0, benchmark_weights=[1.0, 0.0]
        )
        a = self.make_traj([[100, 110]], [[100, 100]])
        b = self.make_traj([[100, 110], [100, 90]], [[100, 100], [100, 100]])
        with pytest.raises(ValueError, match="mismatch"):
            mt.report({"a": a, "b": b}, inv)

    def test_json_roundtrip(self, tmp_path):
        inv = bt.InvestmentScenario(
            w0=100.0, T=1.0, dt=1.0, injection=0.0, benchmark_weights=[1.0, 0.0]
        )
        traj = self.make_traj([[100, 120]], [[100, 100]])
        rep = mt.report({"s": traj}, inv, objective_values={"s": 1.5, "dt": 1.0})
        import json

        path = tmp_path / "rep.json"
        rep.to_json(path)
        back = json.loads(path.read_text())
        assert back["prob_outperform"]["s"] == 1.0
        assert back["objective"]["s"] == 1.5
