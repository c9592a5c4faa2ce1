import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ehaoi.errors import PenaltyDiverges
from ehaoi.fcfs import fcfs_avg_aoi, fcfs_avg_exp_penalty, fcfs_violation_prob
from ehaoi.lcfs import (lcfs_avg_aoi, lcfs_avg_exp_penalty, lcfs_peak_cdf, lcfs_sojourn_cdf,
                        lcfs_stats, lcfs_valid_rate, lcfs_violation_prob)
from ehaoi.model import SystemParams
from ehaoi.penalty import avg_aoi_from_moments, avg_peak_from_stats

GRID = list(itertools.product((0.2, 0.5, 0.8), (0, 1, 5, 20), (1, 3, 10)))
params = st.builds(lambda th, K, B: SystemParams(th, 1.0, K, B),
                   st.floats(0.02, 0.98), st.integers(0, 40), st.integers(1, 40))


def test_valid_rate_matches_oracle(frozen):
    for rec in frozen["rates"]:
        p = SystemParams(rec["theta"], 1.0, rec["K"], rec["B"])
        assert lcfs_valid_rate(p) == pytest.approx(rec["lcfs"], rel=1e-13)


def test_valid_rate_limits():
    p = SystemParams(0.5, 1.0, 0, 200)
    assert lcfs_valid_rate(p) == pytest.approx(p.lam, rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(params)
def test_valid_rate_in_range(p):
    assert 0 < lcfs_valid_rate(p) <= p.lam * (1 + 1e-15)


def test_valid_rate_decreasing_in_buffer():
    for th, B in itertools.product((0.2, 0.5, 0.8), (1, 3, 10)):
        vals = np.array([lcfs_valid_rate(SystemParams(th, 1.0, K, B)) for K in range(21)])
        assert np.all(np.diff(vals) <= 1e-15)  # ulp-level noise once the geometric terms vanish
        visible = np.abs(vals[:-1] - vals[-1]) > 1e-13
        assert np.all(np.diff(vals)[visible] < 0)


def test_sojourn_shape(frozen):
    for rec in frozen["atoms"]:
        p = SystemParams(rec["theta"], 1.0, rec["K"], rec["B"])
        d = lcfs_sojourn_cdf(p)
        assert d.atom == pytest.approx(rec["lcfs"], rel=1e-12, abs=1e-15)
        assert len(d.rates) == 1 and d.rates[0] == pytest.approx(p.lam + p.r)
    assert lcfs_sojourn_cdf(SystemParams(0.5, 1.0, 3, 200)).atom == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("th,K,B", GRID)
def test_distributions_are_valid(th, K, B):
    p = SystemParams(th, 1.0, K, B)
    peak = lcfs_peak_cdf(p)
    peak.check()
    lcfs_sojourn_cdf(p).check()
    assert peak.cdf(0.0) == pytest.approx(0.0, abs=1e-10)
    assert peak.cdf(50 / p.lam) >= 1 - 1e-9


@pytest.mark.parametrize("th,K,B", GRID)
def test_moment_identities(th, K, B):
    p = SystemParams(th, 1.0, K, B)
    stats = lcfs_stats(p)
    assert avg_aoi_from_moments(stats) == pytest.approx(lcfs_avg_aoi(p), rel=1e-9)
    rhs = 1 / stats.valid_rate + stats.sojourn.moment(1)
    assert avg_peak_from_stats(stats) == pytest.approx(rhs, rel=1e-9)


def test_theorems_match_oracle(frozen):
    for rec in frozen["route"]:
        if rec["discipline"] != "lcfs":
            continue
        p = SystemParams(rec["theta"] * rec["r"], rec["r"], rec["K"], rec["B"])
        kind, arg = rec["penalty"]
        if kind == "linear":
            got = lcfs_avg_aoi(p)
        elif kind == "exp":
            got = lcfs_avg_exp_penalty(p, arg)
        else:
            got = lcfs_violation_prob(p, arg)
        assert got == pytest.approx(rec["theorem"], rel=1e-11), rec


def test_large_battery_limit():
    assert lcfs_avg_aoi(SystemParams(0.5, 1.0, 5, 60)) == pytest.approx(2.0, rel=1e-12)


def test_dominates_fcfs_on_grid():
    for th, K, B in itertools.product((0.2, 0.5, 0.8), (1, 5, 20), (1, 3, 10)):
        p = SystemParams(th * 2, 2.0, K, B)
        assert lcfs_avg_aoi(p) <= fcfs_avg_aoi(p) * (1 + 1e-12)
        assert lcfs_avg_exp_penalty(p, 0.2) <= fcfs_avg_exp_penalty(p, 0.2) * (1 + 1e-12)
        assert lcfs_violation_prob(p, 2.0) <= fcfs_violation_prob(p, 2.0) + 1e-12


def test_single_slot_buffer_decreasing_in_load():
    vals = [lcfs_avg_aoi(SystemParams(x, 1.0, 1, B)) for B in (1, 3) for x in np.arange(0.1, 0.91, 0.1)]
    for chunk in (vals[:9], vals[9:]):
        assert np.all(np.diff(chunk) < 0)


class TestExponentialPenalty:
    p = SystemParams(0.5, 1.0, 5, 1)

    def test_small_alpha_is_linear(self):
        for a in (1e-6, -1e-6):
            assert lcfs_avg_exp_penalty(self.p, a) == pytest.approx(lcfs_avg_aoi(self.p), rel=1e-4)

    def test_diverges(self):
        with pytest.raises(PenaltyDiverges, match="alpha must be < lambda"):
            lcfs_avg_exp_penalty(self.p, 0.5)


class TestViolation:
    @pytest.mark.parametrize("th,K,B", GRID)
    def test_boundaries(self, th, K, B):
        p = SystemParams(th, 1.0, K, B)
        assert lcfs_violation_prob(p, 0.0) == 1.0
        assert lcfs_violation_prob(p, 200 / p.lam) <= 1e-12

    @settings(max_examples=60, deadline=None)
    @given(params, st.floats(0.0, 30.0), st.floats(0.0, 30.0))
    def test_in_unit_interval_and_decreasing(self, p, b1, b2):
        lo, hi = sorted((b1, b2))
        assert 0.0 <= lcfs_violation_prob(p, hi) <= lcfs_violation_prob(p, lo) + 1e-12 <= 1 + 1e-12

    def test_large_k(self):
        v = lcfs_violation_prob(SystemParams(0.9, 1.0, 300, 2), 50.0)
        assert math.isfinite(v) and 0.0 <= v <= 1.0
