import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import trapezoid

from ehaoi.errors import Infeasible, PenaltyDiverges
from ehaoi.fcfs import (fcfs_avg_aoi, fcfs_avg_exp_penalty, fcfs_interarrival_cdf,
                        fcfs_peak_cdf, fcfs_peak_violation_bound_check, fcfs_sojourn_cdf,
                        fcfs_stats, fcfs_valid_rate, fcfs_violation_prob, min_battery_for_aoi)
from ehaoi.model import SystemParams
from ehaoi.penalty import avg_aoi_from_moments, avg_peak_from_stats

GRID = list(itertools.product((0.2, 0.5, 0.8), (0, 1, 5, 20), (1, 3, 10)))
params = st.builds(lambda th, K, B: SystemParams(th, 1.0, K, B),
                   st.floats(0.02, 0.98), st.integers(0, 40), st.integers(1, 40))


def test_valid_rate_example():
    assert fcfs_valid_rate(SystemParams(0.5, 1.0, 1, 1)) == pytest.approx(3 / 7, rel=1e-15)


def test_valid_rate_limits():
    assert fcfs_valid_rate(SystemParams(0.001, 1.0, 1, 1)) == pytest.approx(0.001, rel=1e-6)
    assert fcfs_valid_rate(SystemParams(0.5, 1.0, 100, 100)) == pytest.approx(0.5, rel=1e-12)


def test_valid_rate_matches_oracle(frozen):
    for rec in frozen["rates"]:
        p = SystemParams(rec["theta"], 1.0, rec["K"], rec["B"])
        assert fcfs_valid_rate(p) == pytest.approx(rec["fcfs"], rel=1e-13)


def test_sojourn_atom(frozen):
    assert fcfs_sojourn_cdf(SystemParams(0.5, 1.0, 1, 1)).atom == pytest.approx(2 / 3, rel=1e-14)
    for rec in frozen["atoms"]:
        p = SystemParams(rec["theta"], 1.0, rec["K"], rec["B"])
        assert fcfs_sojourn_cdf(p).atom == pytest.approx(rec["fcfs"], rel=1e-12, abs=1e-15)
    assert fcfs_sojourn_cdf(SystemParams(0.5, 1.0, 3, 200)).atom == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("th,K,B", GRID)
def test_distributions_are_valid(th, K, B):
    p = SystemParams(th, 1.0, K, B)
    peak, soj = fcfs_peak_cdf(p), fcfs_sojourn_cdf(p)
    peak.check()
    soj.check()
    assert peak.atom == 0.0
    assert peak.cdf(0.0) == pytest.approx(0.0, abs=1e-12)
    assert peak.cdf(50 / p.lam) >= 1 - 1e-9


@pytest.mark.parametrize("th,K,B", GRID)
def test_moment_identities(th, K, B):
    stats = fcfs_stats(SystemParams(th, 1.0, K, B))
    assert avg_aoi_from_moments(stats) == pytest.approx(fcfs_avg_aoi(SystemParams(th, 1.0, K, B)),
                                                        rel=1e-9)
    rhs = 1 / stats.valid_rate + stats.sojourn.moment(1)
    assert avg_peak_from_stats(stats) == pytest.approx(rhs, rel=1e-9)


def test_avg_aoi_large_battery():
    assert fcfs_avg_aoi(SystemParams(0.5, 1.0, 5, 60)) == pytest.approx(2.0, rel=1e-12)


def test_avg_aoi_decreasing_in_battery():
    for th, K in itertools.product((0.2, 0.5, 0.8), (0, 1, 5, 20)):
        vals = np.array([fcfs_avg_aoi(SystemParams(th, 1.0, K, B)) for B in range(1, 31)])
        assert np.all(np.diff(vals) <= 0)
        # strict wherever the gap to the limit is still above round-off
        visible = (vals[:-1] - 1 / th) > 1e-13 * vals[:-1]
        assert np.all(np.diff(vals)[visible] < 0)
        assert min(vals) >= 1 / th


def test_k_zero_is_finite():
    for th, B in itertools.product((0.2, 0.5, 0.8), (1, 3, 10)):
        p = SystemParams(th, 1.0, 0, B)
        assert math.isfinite(fcfs_avg_aoi(p))
        assert math.isfinite(fcfs_avg_exp_penalty(p, -0.3))
        assert math.isfinite(fcfs_violation_prob(p, 1.0))


def test_theorems_match_oracle(frozen):
    for rec in frozen["route"]:
        if rec["discipline"] != "fcfs":
            continue
        p = SystemParams(rec["theta"] * rec["r"], rec["r"], rec["K"], rec["B"])
        kind, arg = rec["penalty"]
        if kind == "linear":
            got = fcfs_avg_aoi(p)
        elif kind == "exp":
            got = fcfs_avg_exp_penalty(p, arg)
        else:
            got = fcfs_violation_prob(p, arg)
        assert got == pytest.approx(rec["theorem"], rel=1e-11), rec


class TestExponentialPenalty:
    p = SystemParams(0.5, 1.0, 5, 1)

    def test_small_alpha_is_linear(self):
        for a in (1e-6, -1e-6):
            assert fcfs_avg_exp_penalty(self.p, a) == pytest.approx(fcfs_avg_aoi(self.p), rel=1e-4)

    @pytest.mark.parametrize("a", [0.5, 0.6, 2.0])
    def test_alpha_at_or_above_lambda_diverges(self, a):
        with pytest.raises(PenaltyDiverges, match="alpha must be < lambda"):
            fcfs_avg_exp_penalty(self.p, a)

    def test_limit_branch_is_continuous(self, frozen):
        # alpha = r - lambda = 0.3 with lambda = 0.7
        for K, B in ((5, 1), (3, 2)):
            p = SystemParams(0.7, 1.0, K, B)
            lim = fcfs_avg_exp_penalty(p, 0.3, branch="limit")
            assert lim == pytest.approx(frozen["misc"][f"fcfs_exp_limit_K{K}_B{B}"], rel=1e-12)
            assert lim == pytest.approx(frozen["misc"][f"fcfs_exp_eq5_K{K}_B{B}"], rel=1e-12)
            for da in (1e-5, -1e-5):
                gen = fcfs_avg_exp_penalty(p, 0.3 + da, branch="generic")
                assert gen == pytest.approx(lim, rel=1e-3)
            assert fcfs_avg_exp_penalty(p, 0.3) == lim
            # the generic branch stays accurate right up to the switch window
            edge = fcfs_avg_exp_penalty(p, 0.3 + 2e-7, branch="generic")
            assert edge == pytest.approx(lim, rel=1e-6)

    def test_unknown_branch(self):
        with pytest.raises(ValueError):
            fcfs_avg_exp_penalty(self.p, 0.2, branch="other")

    def test_negative_alpha_below_linear(self):
        assert fcfs_avg_exp_penalty(self.p, -0.5) < fcfs_avg_aoi(self.p)


class TestViolation:
    @pytest.mark.parametrize("th,K,B", GRID)
    def test_boundaries(self, th, K, B):
        p = SystemParams(th, 1.0, K, B)
        assert fcfs_violation_prob(p, 0.0) == 1.0
        assert fcfs_violation_prob(p, 200 / p.lam) <= 1e-12

    @settings(max_examples=60, deadline=None)
    @given(params, st.floats(0.0, 30.0), st.floats(0.0, 30.0))
    def test_in_unit_interval_and_decreasing(self, p, b1, b2):
        lo, hi = sorted((b1, b2))
        v_lo, v_hi = fcfs_violation_prob(p, lo), fcfs_violation_prob(p, hi)
        assert 0.0 <= v_hi <= v_lo + 1e-12 <= 1.0 + 1e-12

    @settings(max_examples=60, deadline=None)
    @given(params, st.floats(0.0, 20.0))
    def test_peak_tail_bounds_violation(self, p, beta):
        peak_tail, viol = fcfs_peak_violation_bound_check(p, beta)
        assert peak_tail >= viol - 1e-12

    def test_bound_at_zero(self):
        peak_tail, viol = fcfs_peak_violation_bound_check(SystemParams(0.5, 1.0, 5, 1), 0.0)
        assert peak_tail == pytest.approx(1.0, abs=1e-12) and viol == 1.0

    def test_negative_beta(self):
        with pytest.raises(ValueError):
            fcfs_violation_prob(SystemParams(0.5, 1.0, 5, 1), -1.0)

    def test_large_k_poisson_sums(self):
        # factorial sums near K = 170 must not overflow
        p = SystemParams(0.9, 1.0, 300, 2)
        v = fcfs_violation_prob(p, 50.0)
        assert 0.0 <= v <= 1.0 and math.isfinite(v)


class TestMinBattery:
    def test_infeasible_at_one_over_lambda(self):
        with pytest.raises(Infeasible):
            min_battery_for_aoi(0.5, 1.0, 5, 2.0)

    def test_huge_target_needs_one(self):
        assert min_battery_for_aoi(0.5, 1.0, 5, 1e6 / 0.5) == 1

    @pytest.mark.parametrize("lam,K,dmax", [(0.5, 5, 2.5), (0.5, 5, 2.01), (0.8, 0, 1.3),
                                            (0.3, 20, 3.4), (0.9, 2, 1.2)])
    def test_bracketing(self, lam, K, dmax):
        B = min_battery_for_aoi(lam, 1.0, K, dmax)
        assert fcfs_avg_aoi(SystemParams(lam, 1.0, K, B)) <= dmax
        if B > 1:
            assert fcfs_avg_aoi(SystemParams(lam, 1.0, K, B - 1)) > dmax

    def test_beyond_capacity_ceiling(self):
        with pytest.raises(Infeasible):
            min_battery_for_aoi(0.99, 1.0, 5, 1 / 0.99 + 1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0.01, 0.99), st.integers(0, 60), st.floats(1e-9, 1e3))
    def test_any_feasible_target_gets_a_battery(self, th, K, excess):
        # the log argument stays positive whenever delta_max > 1/lambda
        dmax = (1 + excess) / th
        try:
            B = min_battery_for_aoi(th, 1.0, K, dmax)
        except Infeasible:
            return
        assert fcfs_avg_aoi(SystemParams(th, 1.0, K, B)) <= dmax


def test_interarrival_cdf():
    p = SystemParams(0.5, 1.0, 1, 1)
    assert float(fcfs_interarrival_cdf(p, 0.0)) == pytest.approx(0.0, abs=1e-15)
    assert float(fcfs_interarrival_cdf(p, 50 / p.lam)) >= 1 - 1e-9
    xs = np.linspace(0, 20, 200)
    assert np.all(np.diff(fcfs_interarrival_cdf(p, xs)) >= -1e-15)
    # its mean is the reciprocal valid-update rate
    grid = np.linspace(0, 200, 200_001)
    mean = trapezoid(1 - fcfs_interarrival_cdf(p, grid), grid)
    assert mean == pytest.approx(1 / fcfs_valid_rate(p), rel=1e-6)
