import itertools

import numpy as np
import pytest

from ehaoi.analysis import theorem_penalty
from ehaoi.asymptotics import asymptotic_limit, asymptotic_penalty, battery_decay_rate
from ehaoi.errors import PenaltyDiverges, UnsupportedPenalty
from ehaoi.fcfs import fcfs_avg_aoi
from ehaoi.model import Custom, Discipline, Exponential, Linear, Step, SystemParams

FCFS, LCFS = Discipline.FCFS, Discipline.LCFS


def test_fcfs_linear_example():
    p = SystemParams(0.5, 1.0, 0, 1)
    assert asymptotic_penalty(p, FCFS, Linear()) == pytest.approx(2.5, rel=1e-15)
    assert asymptotic_penalty(p, FCFS, Linear()) == pytest.approx(
        fcfs_avg_aoi(p.with_(K=200)), rel=1e-6)


def test_lcfs_linear_below_fcfs():
    for th, B in itertools.product((0.2, 0.5, 0.8), (1, 3, 10)):
        p = SystemParams(th, 1.0, 0, B)
        lcfs = asymptotic_penalty(p, LCFS, Linear())
        assert lcfs == pytest.approx(1 / th + th ** (B + 2) / th, rel=1e-14)
        assert lcfs <= asymptotic_penalty(p, FCFS, Linear())


@pytest.mark.parametrize("d", list(Discipline))
def test_huge_battery_gives_first_term(d):
    p = SystemParams(0.5, 1.0, 0, 200)
    assert asymptotic_penalty(p, d, Linear()) == pytest.approx(2.0, rel=1e-15)
    assert asymptotic_penalty(p, d, Exponential(0.2)) == pytest.approx(1 / 0.3, rel=1e-15)
    assert asymptotic_penalty(p, d, Step(2.0)) == pytest.approx(np.exp(-1.0), rel=1e-15)


def test_decay_rate_examples():
    assert battery_decay_rate(SystemParams(0.3, 1.0, 0, 5), FCFS, Linear()) == pytest.approx(0.3, abs=1e-9)
    assert battery_decay_rate(SystemParams(0.7, 1.0, 0, 2), LCFS, Step(2.0)) == pytest.approx(0.7, abs=1e-9)
    for d, spec in itertools.product(Discipline, (Linear(), Exponential(0.1), Step(1.0))):
        assert battery_decay_rate(SystemParams(0.5, 1.0, 0, 3), d, spec) == pytest.approx(0.5, abs=1e-9)


def _specs(th):
    return [Linear(), Step(2.0), Exponential(min(0.1, 0.5 * th, 0.5 * (1 - th)))]


def test_finite_buffer_converges():
    for th, B, d in itertools.product((0.2, 0.5, 0.8), (1, 3), Discipline):
        p = SystemParams(th, 1.0, 200, B)
        for spec in _specs(th):
            assert theorem_penalty(p, d, spec) == pytest.approx(
                asymptotic_penalty(p, d, spec), rel=1e-6)


def test_monotone_in_battery_and_load():
    for d in Discipline:
        for spec in (Linear(), Step(2.0), Exponential(0.02)):
            for th in (0.2, 0.5, 0.8):
                vals = [asymptotic_penalty(SystemParams(th, 1.0, 0, B), d, spec) for B in range(1, 11)]
                assert np.all(np.diff(vals) < 0)
            # fixed lambda, shrinking r raises theta
            for B in (1, 3):
                vals = [asymptotic_penalty(SystemParams(0.15, 0.15 / th, 0, B), d, spec)
                        for th in (0.2, 0.35, 0.5, 0.65, 0.8)]
                assert np.all(np.diff(vals) > 0)


def test_limit_helper():
    p = SystemParams(0.5, 1.0, 0, 1)
    assert asymptotic_limit(p, LCFS, Step(1.0)) == pytest.approx(np.exp(-0.5))


class TestPreconditions:
    def test_custom_rejected(self):
        with pytest.raises(UnsupportedPenalty):
            asymptotic_penalty(SystemParams(0.5, 1.0, 0, 1), FCFS, Custom(lambda t: t, 0.0))

    @pytest.mark.parametrize("d", list(Discipline))
    def test_alpha_at_lambda(self, d):
        with pytest.raises(PenaltyDiverges):
            asymptotic_penalty(SystemParams(0.5, 1.0, 0, 1), d, Exponential(0.5))

    def test_fcfs_needs_alpha_below_r_minus_lambda(self):
        p = SystemParams(0.7, 1.0, 0, 1)
        with pytest.raises(PenaltyDiverges):
            asymptotic_penalty(p, FCFS, Exponential(0.3))
        # LCFS only needs alpha < lambda
        assert np.isfinite(asymptotic_penalty(p, LCFS, Exponential(0.3)))
