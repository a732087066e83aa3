import math

import numpy as np
import pytest
from scipy.stats import poisson

from rrdps.decoy import (
    DecoyEstimates,
    DecoyEstimationError,
    DecoyIntensities,
    DecoyObservations,
    estimate_single_photon,
    experimental_key_rate,
    recompute_L65_experiment,
)
from rrdps.rates import ChannelModel, ProtocolConfig, yields_with_monitor

INTENS = DecoyIntensities(0.13, 0.03, 0.0003, 3)
# Published L=3 experiment: observations and the two key rates (None where no key).
TABLE = {
    50: ((3.24e-3, 0.0176, 7.52e-4, 0.0195, 1.12e-5), 8.14e-5, 3.60e-4),
    100: ((3.28e-4, 0.0226, 7.86e-5, 0.0401, 4.50e-6), 4.98e-6, 3.15e-5),
    140: ((5.52e-5, 0.0499, 1.56e-5, 0.1331, 3.87e-6), None, 1.45e-6),
}


def rates(row, exponent="packet"):
    obs = DecoyObservations(*row)
    est = estimate_single_photon(INTENS, obs, exponent)
    return experimental_key_rate(INTENS, obs, est, "R1"), experimental_key_rate(INTENS, obs, est, "R2")


def within(value, target, rel):
    if target is None:
        return value is None
    return value is not None and abs(value - target) <= rel * target


@pytest.mark.parametrize("km", sorted(TABLE))
def test_published_rates(km):
    row, R1, R2 = TABLE[km]
    got1, got2 = rates(row)
    assert within(got1, R1, 0.05), (got1, R1)
    assert within(got2, R2, 0.05), (got2, R2)


def test_per_pulse_exponent_misses_the_table():
    misses = 0
    for row, R1, R2 in TABLE.values():
        got1, got2 = rates(row, "pulse")
        misses += (not within(got1, R1, 0.05)) + (not within(got2, R2, 0.05))
    assert misses > 0


def test_formula_by_hand_50km():
    obs = DecoyObservations(*TABLE[50][0])
    s, d, v = 0.39, 0.09, 0.0009
    Y0 = (d * obs.Q_v * math.exp(v) - v * obs.Q_d * math.exp(d)) / (d - v)
    Y1 = s / (s * d - s * v - d * d + v * v) * (
        obs.Q_d * math.exp(d) - obs.Q_v * math.exp(v) - (d * d - v * v) / (s * s) * (obs.Q_s * math.exp(s) - Y0)
    )
    E1 = (obs.E_s * obs.Q_s * math.exp(s) - obs.E_d * obs.Q_d * math.exp(d)) / ((s - d) * Y1)
    est = estimate_single_photon(INTENS, obs)
    assert (est.Y0, est.Y1, est.E1) == pytest.approx((Y0, Y1, E1), rel=1e-13)
    assert not est.clipped


def test_vacuum_yield_clamp():
    # A vacuum gain far below the decoy's makes the raw Y0 negative.
    obs = DecoyObservations(3.24e-3, 0.0176, 7.52e-4, 0.0195, 1e-9)
    assert estimate_single_photon(INTENS, obs).Y0 == 0.0


def test_error_rate_clip_is_flagged():
    obs = DecoyObservations(3.24e-3, 0.4, 7.52e-4, 0.0, 1.12e-5)
    est = estimate_single_photon(INTENS, obs)
    assert est.clipped and est.E1 == 0.5


def test_nonpositive_yield_fails():
    obs = DecoyObservations(3.24e-3, 0.0176, 1e-6, 0.0195, 1.12e-5)
    with pytest.raises(DecoyEstimationError):
        estimate_single_photon(INTENS, obs)


def test_zero_single_photon_yield_means_no_key():
    obs = DecoyObservations(*TABLE[50][0])
    assert experimental_key_rate(INTENS, obs, DecoyEstimates(0.0, 0.0, 0.0), "R1") is None


@pytest.mark.parametrize("km", sorted(TABLE))
def test_linear_in_gains(km):
    row = TABLE[km][0]
    base = estimate_single_photon(INTENS, DecoyObservations(*row))
    for c in (0.5, 1.7):
        Qs, Es, Qd, Ed, Qv = row
        est = estimate_single_photon(INTENS, DecoyObservations(c * Qs, Es, c * Qd, Ed, c * Qv))
        assert est.Y0 == pytest.approx(c * base.Y0, rel=1e-12)
        assert est.Y1 == pytest.approx(c * base.Y1, rel=1e-12)
        assert est.E1 == pytest.approx(base.E1, rel=1e-12)


def test_constrained_rate_dominates():
    for row, _, _ in TABLE.values():
        R1, R2 = rates(row)
        assert R2 is not None
        assert R1 is None or R2 >= R1


def test_validation():
    with pytest.raises(ValueError):
        DecoyIntensities(0.03, 0.13, 0.0, 3)
    with pytest.raises(ValueError):
        DecoyObservations(1.2, 0.0, 0.0, 0.0, 0.0)
    assert DecoyObservations(1e-5, 0.0, 1e-5, 0.0, 1e-3).suspicious
    with pytest.raises(ValueError):
        experimental_key_rate(INTENS, DecoyObservations(*TABLE[50][0]), DecoyEstimates(0, 1e-3, 0.01), "R3")


def synthesize(channel, L, intensities):
    cfg = ProtocolConfig(L=L)
    n = np.arange(0, 120)
    rows = np.array([yields_with_monitor(channel, cfg, int(i)) for i in n])
    out = []
    for mu in intensities:
        w = poisson.pmf(n, L * mu)
        Q = float(w @ rows[:, 0])
        out.append((Q, float(w @ (rows[:, 0] * rows[:, 1])) / Q))
    return rows, out


def test_forward_round_trip_bias():
    rng = np.random.default_rng(7)
    for _ in range(100):
        L = int(rng.integers(3, 9))
        ch = ChannelModel(rng.uniform(0, 40), 10 ** rng.uniform(-7, -5), rng.uniform(0, 0.1))
        s = rng.uniform(0.05, 0.3) / L * 3
        intens = DecoyIntensities(s, s * rng.uniform(0.1, 0.4), s * rng.uniform(0, 0.01), L)
        rows, ((Qs, Es), (Qd, Ed), (Qv, _)) = synthesize(ch, L, (intens.mu_signal, intens.mu_decoy, intens.mu_vacuum))
        est = estimate_single_photon(intens, DecoyObservations(Qs, Es, Qd, Ed, Qv))
        Y1_true, E1_true = rows[1]
        assert est.Y1 <= Y1_true * (1 + 1e-9)
        assert est.Y1 >= 0.5 * Y1_true  # the estimate is a usable lower bound, not a vacuous one
        assert est.E1 >= E1_true * (1 - 1e-9) or est.clipped


def test_L65_recalculation():
    res = recompute_L65_experiment()
    assert res.iae10 == pytest.approx(0.513, abs=2e-3)
    assert res.R2 == pytest.approx(1.44e-6, rel=0.02)
    assert res.R1 == pytest.approx(5e-8, rel=0.2)
