import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import poisson

from oracles import gain_error_mp, isclose, yields_mp
from rrdps.bound import cached_iae, original_bound
from rrdps.rates import (
    ChannelModel,
    ProtocolConfig,
    bb84_key_rate,
    bb84_yield,
    gain_error_no_monitor,
    key_rate_infinite_decoy,
    key_rate_no_monitor,
    original_iae,
    proposed_iae,
    q_r,
    rate_at,
    sweep,
    yields_with_monitor,
)

DEFAULT = ChannelModel(loss_db=20.0, dark_rate=1e-6, misalignment=0.015)


def test_channel_and_config_validation():
    assert ChannelModel(0.0).eta == 1.0
    assert ChannelModel(30.0).eta == pytest.approx(1e-3)
    for bad in (dict(loss_db=-1), dict(dark_rate=1.0), dict(misalignment=0.6)):
        with pytest.raises(ValueError):
            ChannelModel(**bad)
    for bad in (dict(L=1), dict(mu=0.0), dict(nu_th=0), dict(nu_th=41), dict(ec_efficiency=0.9)):
        with pytest.raises(ValueError):
            ProtocolConfig(**bad)


# ---------------------------------------------------------------- detection model


def test_q_r_examples():
    no_light = ChannelModel(math.inf, 0.0, 0.0)
    assert q_r(no_light, ProtocolConfig(L=5), 2) == 0.0
    single_window = q_r(ChannelModel(0.0, 0.0, 0.0), ProtocolConfig(L=3, mu=0.1), 2)
    assert single_window == pytest.approx(math.exp(-0.1) * 0.1, rel=1e-15)
    dark = ChannelModel(math.inf, 1e-6, 0.0)
    for r in (1, 3, 7):
        assert q_r(dark, ProtocolConfig(L=8), r) == pytest.approx(2 * (8 - r) * 1e-6, rel=1e-4)
    for r in (0, 8):
        with pytest.raises(ValueError):
            q_r(dark, ProtocolConfig(L=8), r)


def test_gain_error_matches_high_precision():
    cfg = ProtocolConfig(L=16, mu=0.05)
    Q, E = gain_error_no_monitor(DEFAULT, cfg)
    Qm, Em = gain_error_mp(16, DEFAULT.eta, 0.05, 1e-6, 0.015)
    assert isclose(Q, Qm, 1e-12) and isclose(E, Em, 1e-12)


def test_gain_is_mean_of_q_r():
    cfg = ProtocolConfig(L=9, mu=0.2)
    Q, _ = gain_error_no_monitor(DEFAULT, cfg)
    assert Q == pytest.approx(sum(q_r(DEFAULT, cfg, r) for r in range(1, 9)) / 8, rel=1e-14)


@pytest.mark.parametrize("loss", [0.0, 10.0, 35.0])
@pytest.mark.parametrize("e_mis", [0.0, 0.015, 0.15])
def test_error_equals_misalignment_without_dark_counts(loss, e_mis):
    _, E = gain_error_no_monitor(ChannelModel(loss, 0.0, e_mis), ProtocolConfig(L=12, mu=0.07))
    assert E == pytest.approx(e_mis, abs=1e-15)


def test_zero_gain_has_no_error_rate():
    Q, E = gain_error_no_monitor(ChannelModel(math.inf, 0.0, 0.015), ProtocolConfig(L=4))
    assert Q == 0.0 and E is None


def test_yields_match_high_precision():
    cfg = ProtocolConfig(L=16)
    Y, E = yields_with_monitor(DEFAULT, cfg, 2)
    Ym, Em = yields_mp(16, DEFAULT.eta, 1e-6, 0.015, 2)
    assert isclose(Y, Ym, 1e-12) and isclose(E, Em, 1e-12)


def test_yield_collapses():
    ideal = ChannelModel(13.0, 0.0, 0.0)
    for L in (3, 10):
        Y1, E1 = yields_with_monitor(ideal, ProtocolConfig(L=L), 1)
        assert Y1 == pytest.approx(ideal.eta / 2, rel=1e-14) and E1 == 0.0
        assert yields_with_monitor(ideal, ProtocolConfig(L=L), 4)[1] == 0.0
    with pytest.raises(ValueError):
        yields_with_monitor(ideal, ProtocolConfig(L=3), -1)


@pytest.mark.parametrize("L,mu,loss", [(3, 0.1, 0.0), (16, 0.05, 20.0), (32, 0.4, 45.0)])
def test_photon_number_mixture_reproduces_gain(L, mu, loss):
    ch = replace(DEFAULT, loss_db=loss)
    cfg = ProtocolConfig(L=L, mu=mu)
    Q, E = gain_error_no_monitor(ch, cfg)
    n = np.arange(0, 200)
    w = poisson.pmf(n, L * mu)
    rows = np.array([yields_with_monitor(ch, cfg, int(i)) for i in n])
    assert w @ rows[:, 0] == pytest.approx(Q, rel=1e-12)
    assert w @ (rows[:, 0] * rows[:, 1]) == pytest.approx(Q * E, rel=1e-12)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("loss", [0.0, 25.0, 60.0])
def test_quantities_in_unit_interval(loss):
    ch = replace(DEFAULT, loss_db=loss)
    for L in (3, 16, 64):
        cfg = ProtocolConfig(L=L, mu=0.3)
        Q, E = gain_error_no_monitor(ch, cfg)
        assert 0 <= Q <= 1 and 0 <= E <= 0.5
        for i in (1, 2, 7):
            Y, Ei = yields_with_monitor(ch, cfg, i)
            assert 0 <= Y <= 1 and 0 <= Ei <= 1


# ---------------------------------------------------------------- no monitoring


def test_no_detections_gives_zero_rate():
    pt = key_rate_no_monitor(ChannelModel(math.inf, 0.0, 0.015), ProtocolConfig(L=8))
    assert pt.key_rate_R == 0.0


def test_total_leakage_gives_zero_rate():
    pt = key_rate_no_monitor(DEFAULT, ProtocolConfig(L=8), iae=lambda L, N: 1.0)
    assert pt.key_rate_R == 0.0 and pt.clamped


def test_rate_formula_by_hand():
    cfg = ProtocolConfig(L=16, mu=0.05, nu_th=3, ec_efficiency=1.1)
    pt = key_rate_no_monitor(DEFAULT, cfg)
    Q, E = gain_error_no_monitor(DEFAULT, cfg)
    e_src = 1 - sum(math.exp(-0.8) * 0.8**i / math.factorial(i) for i in range(4))
    I = cached_iae(16, 3, "unconstrained")
    expected = (Q * (1 - 1.1 * (-E * math.log2(E) - (1 - E) * math.log2(1 - E))) - e_src - (Q - e_src) * I) / 16
    assert pt.key_rate_R == pytest.approx(max(expected, 0.0), rel=1e-10, abs=1e-18)


def test_proposed_leakage_never_exceeds_original():
    for L in range(3, 21):
        for N in range(1, (L - 1) // 2 + 1):
            assert proposed_iae(L, N) <= original_bound(L, N) + 1e-12, (L, N)


def test_proposed_beats_original_at_30dB():
    ch = replace(DEFAULT, loss_db=30.0)
    cfg = ProtocolConfig(L=32)
    assert rate_at(ch, cfg, "proposed").key_rate_R > rate_at(ch, cfg, "original").key_rate_R


def test_rate_non_increasing_in_loss():
    cfg = ProtocolConfig(L=16, mu=0.05, nu_th=4)
    rates = [key_rate_no_monitor(replace(DEFAULT, loss_db=l), cfg).key_rate_R for l in np.arange(0, 40, 0.5)]
    assert all(b <= a + 1e-18 for a, b in zip(rates, rates[1:]))
    assert rates[0] > 0 and rates[-1] == 0


@pytest.mark.parametrize("L,loss,iae", [(8, 10.0, proposed_iae), (16, 20.0, proposed_iae), (16, 15.0, original_iae)])
def test_mu_optimizer_against_dense_grid(L, loss, iae):
    ch = replace(DEFAULT, loss_db=loss)
    cfg = ProtocolConfig(L=L)
    best = key_rate_no_monitor(ch, cfg, iae, optimize=True)
    scan = max(
        key_rate_no_monitor(ch, replace(cfg, mu=float(m), nu_th=nu), iae).key_rate_R
        for m in np.logspace(-4, 0, 200)
        for nu in range(1, 41)
    )
    assert best.key_rate_R >= scan - 1e-10
    again = key_rate_no_monitor(ch, replace(cfg, mu=best.optimal_mu, nu_th=best.optimal_nu_th), iae)
    assert again.key_rate_R == pytest.approx(best.key_rate_R, rel=1e-12)


# ---------------------------------------------------------------- infinite decoy


def test_decoy_vanishing_source():
    clean = ChannelModel(20.0, 0.0, 0.015)
    pts = [key_rate_infinite_decoy(clean, ProtocolConfig(L=8, mu=m)).key_rate_R for m in (1e-3, 1e-5, 1e-7)]
    assert pts[0] > pts[1] > pts[2] > 0 and pts[2] < 1e-9
    assert key_rate_infinite_decoy(DEFAULT, ProtocolConfig(L=8, mu=1e-7)).key_rate_R == 0.0


def test_decoy_leak_free_limit():
    ideal = ChannelModel(10.0, 0.0, 0.0)
    cfg = ProtocolConfig(L=8, mu=0.1)
    pt = key_rate_infinite_decoy(ideal, cfg, iae=lambda L, N, E: 0.0)
    assert pt.key_rate_R * 8 == pytest.approx(pt.gain_Q, abs=1e-12)


def test_decoy_leakage_uses_per_photon_error():
    cfg = ProtocolConfig(L=6, mu=0.2)
    pt = key_rate_infinite_decoy(DEFAULT, cfg)
    Q, E = gain_error_no_monitor(DEFAULT, cfg)
    cost = 0.0
    for i in range(1, 60):
        Y, Ei = yields_with_monitor(DEFAULT, cfg, i)
        I = 1.0 if i >= 5 else cached_iae(6, i, "constrained", round(Ei, 12))
        cost += poisson.pmf(i, 1.2) * Y * I
    h = -E * math.log2(E) - (1 - E) * math.log2(1 - E)
    assert pt.key_rate_R == pytest.approx((Q * (1 - h) - cost) / 6, rel=1e-9)


def test_decoy_optimizer_against_dense_grid():
    ch = replace(DEFAULT, loss_db=15.0)
    cfg = ProtocolConfig(L=6)
    best = key_rate_infinite_decoy(ch, cfg, optimize=True)
    scan = max(key_rate_infinite_decoy(ch, replace(cfg, mu=float(m))).key_rate_R for m in np.logspace(-4, 0, 200))
    assert best.key_rate_R >= scan - 1e-10


def test_monitoring_extends_distance():
    cfg = ProtocolConfig(L=16)
    losses = np.arange(0, 61, 4.0)
    pts = sweep(DEFAULT, cfg, losses, ["proposed", "decoy"])
    reach = {v: max((p.loss_db for p in pts if p.variant == v and p.key_rate_R > 0), default=-1) for v in ("proposed", "decoy")}
    assert reach["decoy"] > reach["proposed"]


# ---------------------------------------------------------------- BB84


def test_bb84_yield_collapse():
    Y1, E1 = bb84_yield(ChannelModel(7.0, 0.0, 0.0), 1)
    assert Y1 == pytest.approx(ChannelModel(7.0).eta / 2) and E1 == 0.0


def test_bb84_gain_is_photon_mixture():
    from rrdps.rates import _bb84_raw

    mu = 0.4
    Q, E, _ = _bb84_raw(DEFAULT, mu, 1.0)
    n = np.arange(0, 80)
    w = poisson.pmf(n, 2 * mu)
    rows = np.array([bb84_yield(DEFAULT, int(i)) for i in n])
    assert w @ rows[:, 0] == pytest.approx(Q, rel=1e-12)
    assert w @ (rows[:, 0] * rows[:, 1]) == pytest.approx(Q * E, rel=1e-12)
    Y0, E0 = bb84_yield(DEFAULT, 0)
    assert Y0 == pytest.approx(2e-6 * (1 - 1e-6), rel=1e-12) and E0 == 0.5


def test_bb84_high_misalignment_has_no_key():
    for loss in (0.0, 5.0, 20.0, 40.0):
        assert bb84_key_rate(ChannelModel(loss, 1e-6, 0.15)).key_rate_R == 0.0


def test_bb84_positive_at_20dB():
    pt = bb84_key_rate(DEFAULT)
    assert pt.key_rate_R > 0
    scan = max(bb84_key_rate(DEFAULT, mu=float(m)).key_rate_R for m in np.logspace(-4, 0, 200))
    assert pt.key_rate_R >= scan - 1e-10


# ---------------------------------------------------------------- sweep


def test_sweep_composition():
    cfg = ProtocolConfig(L=8)
    assert sweep(DEFAULT, cfg, [10.0], []) == []
    [pt] = sweep(DEFAULT, cfg, [10.0], ["proposed"])
    assert pt == rate_at(replace(DEFAULT, loss_db=10.0), cfg, "proposed")
    pts = sweep(DEFAULT, cfg, [0.0, 5.0], ["bb84", "original"])
    assert [(p.loss_db, p.variant) for p in pts] == [(0.0, "bb84"), (0.0, "original"), (5.0, "bb84"), (5.0, "original")]
    assert pts == sweep(DEFAULT, cfg, [0.0, 5.0], ["bb84", "original"])
    with pytest.raises(ValueError):
        sweep(DEFAULT, cfg, [], ["bb84"])
    with pytest.raises(ValueError):
        sweep(DEFAULT, cfg, [1.0], ["nope"])


def test_rate_points_are_clamped_and_flagged():
    pts = sweep(DEFAULT, ProtocolConfig(L=16), [0.0, 70.0], ["original", "proposed"])
    for p in pts:
        assert p.key_rate_R >= 0
        assert p.clamped == (p.key_rate_R == 0.0)
