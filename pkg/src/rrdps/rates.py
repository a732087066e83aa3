"""
Channel models and asymptotic secret-key rates.

Covers RRDPS without signal-disturbance monitoring (photon-number tagging
above a threshold), RRDPS with monitoring and infinitely many decoy states,
and decoy-state phase-coding BB84 as a baseline. All rates are per pulse.

Conventions
-----------
- ``loss_db`` folds channel loss and detector efficiency together;
  transmittance is ``10 ** (-loss_db / 10)``.
- Gains ``Q`` and yields ``Y_i`` of RRDPS are per packet of ``L`` pulses.
- Negative rates are clamped to zero and flagged on the returned point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import poisson

from rrdps.bound import cached_iae, original_bound
from rrdps.entropy import h2

NU_CAP = 40
MU_RANGE = (1e-4, 1.0)
TAIL_MASS = 1e-12


@dataclass(frozen=True)
class ChannelModel:
    loss_db: float = 0.0
    dark_rate: float = 1e-6
    misalignment: float = 0.015

    def __post_init__(self):
        if self.loss_db < 0:
            raise ValueError("loss_db must be non-negative")
        if not 0.0 <= self.dark_rate < 1.0:
            raise ValueError("dark_rate must lie in [0, 1)")
        if not 0.0 <= self.misalignment <= 0.5:
            raise ValueError("misalignment must lie in [0, 0.5]")

    @property
    def eta(self) -> float:
        return 10.0 ** (-self.loss_db / 10.0)


@dataclass(frozen=True)
class ProtocolConfig:
    """
    Source and post-processing parameters.

    ``nu_th`` is the photon-number tagging threshold used without
    monitoring; ``ec_efficiency`` multiplies ``h2(E)`` in the error-correction
    cost (1.0 is the Shannon limit).
    """

    L: int = 16
    mu: float = 0.05
    nu_th: int = 1
    ec_efficiency: float = 1.0

    def __post_init__(self):
        if self.L < 2:
            raise ValueError("L must be >= 2")
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 1 <= self.nu_th <= NU_CAP:
            raise ValueError(f"nu_th must lie in [1, {NU_CAP}]")
        if self.ec_efficiency < 1.0:
            raise ValueError("ec_efficiency must be >= 1")


@dataclass(frozen=True)
class RatePoint:
    loss_db: float
    gain_Q: float
    error_E: Optional[float]
    key_rate_R: float
    optimal_mu: float
    optimal_nu_th: Optional[int] = None
    clamped: bool = False
    variant: str = ""


# --------------------------------------------------------------------------
# RRDPS detection model


def q_r(channel: ChannelModel, cfg: ProtocolConfig, r: int) -> float:
    """Gain of a packet measured with delay ``r`` (one click among ``L - r`` windows)."""
    L = cfg.L
    if not 1 <= r <= L - 1:
        raise ValueError(f"delay r must lie in [1, {L - 1}], got {r}")
    m = L - r
    d = channel.dark_rate
    em = m * channel.eta * cfg.mu
    return (1 - d) ** (2 * m - 1) * math.exp(-em) * (em + 2 * m * d)


def gain_error_no_monitor(channel: ChannelModel, cfg: ProtocolConfig) -> tuple[float, Optional[float]]:
    """Delay-averaged gain ``Q`` and bit error rate ``E`` (``None`` when ``Q == 0``)."""
    L = cfg.L
    d = channel.dark_rate
    m = np.arange(L - 1, 0, -1, dtype=float)  # L - r for r = 1..L-1
    em = m * channel.eta * cfg.mu
    common = (1 - d) ** (2 * m - 1) * np.exp(-em)
    Q = float(np.sum(common * (em + 2 * m * d)) / (L - 1))
    EQ = float(np.sum(common * (em * channel.misalignment + m * d)) / (L - 1))
    if Q <= 0.0:
        return Q, None
    return Q, EQ / Q


def yields_with_monitor(channel: ChannelModel, cfg: ProtocolConfig, i: int) -> tuple[float, float]:
    """
    Yield ``Y_i`` and error rate ``E_i`` of an ``i``-photon packet.

    ``i = 0`` is allowed and gives the dark-count-only yield with ``E_0 = 1/2``.
    """
    if i < 0:
        raise ValueError("photon number must be non-negative")
    L = cfg.L
    d = channel.dark_rate
    m = np.arange(L - 1, 0, -1, dtype=float)
    frac = m / L * channel.eta
    keep = 1.0 - frac
    common = (1 - d) ** (2 * m - 1) * keep ** (i - 1) if i >= 1 else (1 - d) ** (2 * m - 1) / keep
    Y = float(np.sum(common * (frac * i + keep * 2 * m * d)) / (L - 1))
    EY = float(np.sum(common * (frac * i * channel.misalignment + keep * m * d)) / (L - 1))
    if Y <= 0.0:
        return 0.0, 0.0
    return Y, EY / Y


# --------------------------------------------------------------------------
# leakage providers


def proposed_iae(L: int, N: int) -> float:
    """Unconstrained bound; packets with ``N >= L`` are treated as fully leaked."""
    return 1.0 if N >= L else cached_iae(L, N, "unconstrained")


def original_iae(L: int, N: int) -> float:
    return original_bound(L, N)


def monitored_iae(L: int, N: int, error_rate: float) -> float:
    """Constrained bound at the per-photon-number error rate; 1 for ``N >= L - 1``."""
    if N >= L - 1:
        return 1.0
    E = round(min(max(error_rate, 0.0), 0.5), 12)  # rounded for cache hits
    return cached_iae(L, N, "constrained", E)


# --------------------------------------------------------------------------
# optimisation helper


def _maximize_mu(raw_rate: Callable[[float], float], grid_points: int = 41) -> tuple[float, float]:
    """Maximise ``raw_rate(mu)`` over ``MU_RANGE``: log-grid scan, then bounded Brent in the best cell."""
    lo, hi = (math.log10(v) for v in MU_RANGE)
    grid = np.linspace(lo, hi, grid_points)
    vals = np.array([raw_rate(10.0**s) for s in grid])
    j = int(np.argmax(vals))
    a, b = grid[max(j - 1, 0)], grid[min(j + 1, grid_points - 1)]
    res = minimize_scalar(lambda s: -raw_rate(10.0**s), bounds=(a, b), method="bounded", options={"xatol": 1e-7})
    if -res.fun >= vals[j]:
        return 10.0**res.x, -res.fun
    return 10.0 ** grid[j], float(vals[j])


def _point(loss, Q, E, raw, mu, nu, variant):
    E = None if E is None else float(E)
    raw = float(raw)
    return RatePoint(float(loss), float(Q), E, max(raw, 0.0), float(mu), nu, raw < 0.0, variant)


# --------------------------------------------------------------------------
# RRDPS without monitoring


def _no_monitor_raw(channel, cfg, iae):
    Q, E = gain_error_no_monitor(channel, cfg)
    if Q <= 0.0:
        return Q, E, 0.0
    L = cfg.L
    e_src = float(poisson.sf(cfg.nu_th, L * cfg.mu))
    leak = iae(L, cfg.nu_th)
    raw = (Q * (1 - cfg.ec_efficiency * h2(E)) - e_src - (Q - e_src) * leak) / L
    return Q, E, raw


def key_rate_no_monitor(
    channel: ChannelModel,
    cfg: ProtocolConfig,
    iae: Callable[[int, int], float] = proposed_iae,
    optimize: bool = False,
    nu_cap: int = NU_CAP,
    variant: str = "",
) -> RatePoint:
    """
    Key rate per pulse without signal-disturbance monitoring.

    ``iae(L, N)`` supplies the leakage bound for packets of at most ``N``
    photons (``proposed_iae`` or ``original_iae``); packets above
    ``cfg.nu_th`` are counted as fully leaked. With ``optimize=True`` the
    mean photon number and the integer threshold are both tuned: a log-grid
    table over (mu, nu_th) picks candidates, and the best few thresholds are
    refined in mu by bounded Brent search.
    """
    if not optimize:
        Q, E, raw = _no_monitor_raw(channel, cfg, iae)
        return _point(channel.loss_db, Q, E, raw, cfg.mu, cfg.nu_th, variant)
    nus = np.arange(1, nu_cap + 1)
    leaks = np.array([iae(cfg.L, int(n)) for n in nus])
    mus = np.logspace(*np.log10(MU_RANGE), 41)
    table = np.array([_no_monitor_row(channel, replace(cfg, mu=m), nus, leaks) for m in mus])
    best_per_nu = table.max(axis=0)
    best = None
    for j in np.argsort(best_per_nu)[::-1][:3]:
        base = replace(cfg, nu_th=int(nus[j]))
        mu, raw = _maximize_mu(lambda m: _no_monitor_raw(channel, replace(base, mu=m), iae)[2])
        if best is None or raw > best[1]:
            best = (mu, raw, int(nus[j]))
    mu, raw, nu = best
    Q, E, _ = _no_monitor_raw(channel, replace(cfg, mu=mu, nu_th=nu), iae)
    return _point(channel.loss_db, Q, E, raw, mu, nu, variant)


def _no_monitor_row(channel, cfg, nus, leaks):
    """Unclamped rates for every threshold in ``nus`` at a fixed mu."""
    Q, E = gain_error_no_monitor(channel, cfg)
    if Q <= 0.0:
        return np.zeros(len(nus))
    e_src = poisson.sf(nus, cfg.L * cfg.mu)
    return (Q * (1 - cfg.ec_efficiency * h2(E)) - e_src - (Q - e_src) * leaks) / cfg.L


# --------------------------------------------------------------------------
# RRDPS with monitoring and infinite decoys


@lru_cache(maxsize=8192)
def _photon_row(channel: ChannelModel, L: int, i: int) -> tuple[float, float]:
    """Yield and leakage bound of ``i``-photon packets (independent of mu)."""
    Y, E_i = yields_with_monitor(channel, ProtocolConfig(L=L), i)
    return Y, monitored_iae(L, i, E_i)


def _decoy_raw(channel, cfg, iae):
    Q, E = gain_error_no_monitor(channel, cfg)
    if Q <= 0.0:
        return Q, E, 0.0
    L = cfg.L
    lam = L * cfg.mu
    n_max = max(int(poisson.isf(TAIL_MASS, lam)), 1)
    rows = []
    for i in range(1, n_max + 1):
        if iae is monitored_iae:
            rows.append(_photon_row(channel, L, i))
        else:
            Y_i, E_i = yields_with_monitor(channel, cfg, i)
            rows.append((Y_i, iae(L, i, E_i)))
    Y, leak = np.array(rows).T
    weights = poisson.pmf(np.arange(1, n_max + 1), lam)
    tail = float(poisson.sf(n_max, lam))  # counted with yield 1 and full leakage
    cost = float(np.sum(weights * Y * leak)) + tail
    raw = (Q * (1 - cfg.ec_efficiency * h2(E)) - cost) / L
    return Q, E, raw


def key_rate_infinite_decoy(
    channel: ChannelModel,
    cfg: ProtocolConfig,
    iae: Callable[[int, int, float], float] = monitored_iae,
    optimize: bool = False,
    variant: str = "",
) -> RatePoint:
    """
    Key rate per pulse with error monitoring and ideal decoy-state estimation.

    Each photon number ``i`` is charged ``Y_i * iae(L, i, E_i)``, weighted by
    the Poisson probability of an ``i``-photon packet. The Poisson sum stops
    once the remaining tail mass is below 1e-12; the tail is charged in full.
    """
    if not optimize:
        Q, E, raw = _decoy_raw(channel, cfg, iae)
        return _point(channel.loss_db, Q, E, raw, cfg.mu, None, variant)
    mu, raw = _maximize_mu(lambda m: _decoy_raw(channel, replace(cfg, mu=m), iae)[2])
    Q, E, _ = _decoy_raw(channel, replace(cfg, mu=mu), iae)
    return _point(channel.loss_db, Q, E, raw, mu, None, variant)


# --------------------------------------------------------------------------
# BB84 baseline


def bb84_yield(channel: ChannelModel, i: int) -> tuple[float, float]:
    """Yield and error rate of an ``i``-photon pulse pair in phase-coding BB84."""
    eta, d = channel.eta, channel.dark_rate
    keep = 1.0 - eta / 2.0
    Y = keep ** (i - 1) * (1 - d) * (i * eta / 2.0 + keep * 2 * d)
    EY = keep ** (i - 1) * (1 - d) * (i * eta / 2.0 * channel.misalignment + keep * d)
    return Y, (EY / Y if Y > 0 else 0.0)


def _bb84_raw(channel, mu, f):
    # Poisson sums of the i-photon yields over i >= 0 in closed form
    lam = 2.0 * mu
    eta, d = channel.eta, channel.dark_rate
    att = math.exp(-lam * eta / 2.0)
    Q = (1 - d) * (eta / 2.0 * lam + 2 * d) * att
    EQ = (1 - d) * (eta / 2.0 * lam * channel.misalignment + d) * att
    E = EQ / Q if Q > 0 else None
    if Q <= 0.0:
        return Q, E, 0.0
    Y1, E1 = bb84_yield(channel, 1)
    raw = (-Q * f * h2(E) + math.exp(-lam) * lam * Y1 * (1 - h2(E1))) / 2.0
    return Q, E, raw


def bb84_key_rate(channel: ChannelModel, mu: Optional[float] = None, ec_efficiency: float = 1.0, variant: str = "bb84") -> RatePoint:
    """Decoy-state BB84 key rate per pulse; ``mu=None`` optimises the signal intensity."""
    if mu is None:
        mu, raw = _maximize_mu(lambda m: _bb84_raw(channel, m, ec_efficiency)[2])
    Q, E, raw = _bb84_raw(channel, mu, ec_efficiency)
    return _point(channel.loss_db, Q, E, raw, mu, None, variant)


# --------------------------------------------------------------------------
# sweeps

VARIANTS = ("original", "proposed", "decoy", "bb84")


def rate_at(channel: ChannelModel, cfg: ProtocolConfig, variant: str, optimize: bool = True, nu_cap: int = NU_CAP) -> RatePoint:
    if variant == "original":
        return key_rate_no_monitor(channel, cfg, original_iae, optimize, nu_cap, variant)
    if variant == "proposed":
        return key_rate_no_monitor(channel, cfg, proposed_iae, optimize, nu_cap, variant)
    if variant == "decoy":
        return key_rate_infinite_decoy(channel, cfg, monitored_iae, optimize, variant)
    if variant == "bb84":
        return bb84_key_rate(channel, None if optimize else cfg.mu, cfg.ec_efficiency, variant)
    raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")


def sweep(
    channel: ChannelModel,
    cfg: ProtocolConfig,
    losses: Sequence[float],
    variants: Iterable[str],
    optimize: bool = True,
    nu_cap: int = NU_CAP,
) -> list[RatePoint]:
    """One optimised rate point per (loss, variant), in grid order."""
    variants = list(variants)
    if len(losses) == 0:
        raise ValueError("loss grid is empty")
    out = []
    for loss in losses:
        ch = replace(channel, loss_db=float(loss))
        for v in variants:
            out.append(rate_at(ch, cfg, v, optimize, nu_cap))
    return out
