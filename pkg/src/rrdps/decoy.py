"""
Three-intensity decoy-state estimation and experimental key rates.

Intensities are photons per pulse; a packet of ``L`` pulses therefore
carries a Poisson photon number with mean ``L * mu``. Observed gains are per
packet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

from scipy.stats import poisson

from rrdps.bound import cached_iae
from rrdps.entropy import h2

EXPONENTS = ("packet", "pulse")


class DecoyEstimationError(ValueError):
    """The observations do not support a positive single-photon yield."""


@dataclass(frozen=True)
class DecoyIntensities:
    mu_signal: float
    mu_decoy: float
    mu_vacuum: float
    L: int

    def __post_init__(self):
        if not self.mu_signal > self.mu_decoy > self.mu_vacuum >= 0.0:
            raise ValueError("intensities must satisfy mu_signal > mu_decoy > mu_vacuum >= 0")
        if self.L < 2:
            raise ValueError("L must be >= 2")


@dataclass(frozen=True)
class DecoyObservations:
    Q_s: float
    E_s: float
    Q_d: float
    E_d: float
    Q_v: float

    def __post_init__(self):
        for name in ("Q_s", "E_s", "Q_d", "E_d", "Q_v"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    @property
    def suspicious(self) -> bool:
        """Vacuum gain above signal gain usually means swapped columns."""
        return self.Q_v > self.Q_s


@dataclass(frozen=True)
class DecoyEstimates:
    Y0: float
    Y1: float
    E1: float
    clipped: bool = False


def estimate_single_photon(intens: DecoyIntensities, obs: DecoyObservations, exponent: str = "packet") -> DecoyEstimates:
    """
    Lower-bound the single-photon yield and upper-bound its error rate.

    Parameters
    ----------
    intens, obs : DecoyIntensities, DecoyObservations
    exponent : {"packet", "pulse"}
        Exponents in the ``Y1`` expression: ``"packet"`` uses ``exp(L mu)``
        like the ``Y0`` and ``E1`` lines; ``"pulse"`` uses ``exp(mu)``. Only
        ``"packet"`` reproduces the published L=3 experiment and it is the
        default. ``"pulse"`` is kept for comparison.

    Returns
    -------
    DecoyEstimates
        ``E1`` is clipped into [0, 0.5] and ``clipped`` records whether that
        happened.

    Raises
    ------
    DecoyEstimationError
        If the estimated ``Y1`` is not positive.
    """
    if exponent not in EXPONENTS:
        raise ValueError(f"exponent must be one of {EXPONENTS}")
    L = intens.L
    s, d, v = L * intens.mu_signal, L * intens.mu_decoy, L * intens.mu_vacuum
    Y0 = max((d * obs.Q_v * math.exp(v) - v * obs.Q_d * math.exp(d)) / (d - v), 0.0)
    if exponent == "packet":
        es, ed, ev = math.exp(s), math.exp(d), math.exp(v)
    else:
        es, ed, ev = (math.exp(m) for m in (intens.mu_signal, intens.mu_decoy, intens.mu_vacuum))
    denom = s * d - s * v - d**2 + v**2
    if denom <= 0.0:
        raise DecoyEstimationError("signal intensity too small relative to decoy for the estimate")
    Y1 = s / denom * (obs.Q_d * ed - obs.Q_v * ev - (d**2 - v**2) / s**2 * (obs.Q_s * es - Y0))
    if not Y1 > 0.0:
        raise DecoyEstimationError(f"single-photon yield estimate is not positive ({Y1:.3e})")
    E1 = (obs.E_s * obs.Q_s * math.exp(s) - obs.E_d * obs.Q_d * math.exp(d)) / ((s - d) * Y1)
    clipped = not 0.0 <= E1 <= 0.5
    return DecoyEstimates(Y0, Y1, min(max(E1, 0.0), 0.5), clipped)


def experimental_key_rate(
    intens: DecoyIntensities,
    obs: DecoyObservations,
    est: DecoyEstimates,
    mode: str = "R2",
    f: float = 1.0,
) -> Optional[float]:
    """
    Key rate per pulse from single-photon packets, or ``None`` if not positive.

    ``R = (s e^{-s} Y1 (1 - I) - Q_s f h2(E_s)) / L`` with ``s`` the packet
    mean. ``mode="R1"`` bounds ``I`` without the error-rate constraint;
    ``mode="R2"`` constrains it at ``E = E1``.
    """
    L = intens.L
    if mode == "R1":
        leak = cached_iae(L, 1, "unconstrained")
    elif mode == "R2":
        leak = cached_iae(L, 1, "constrained", round(est.E1, 12))
    else:
        raise ValueError("mode must be 'R1' or 'R2'")
    s = L * intens.mu_signal
    R = (s * math.exp(-s) * est.Y1 * (1.0 - leak) - obs.Q_s * f * h2(obs.E_s)) / L
    return R if R > 0.0 else None


class L65Result(NamedTuple):
    R1: float
    R2: float
    iae10: float


def recompute_L65_experiment() -> L65Result:
    """
    Rates for the reported L=65 experiment under the original and improved bounds.

    Fixed inputs: 0.037 photons per pulse, packet gain 8.435e-4, error rate
    0.058, tagging threshold 10 photons, error-correction inefficiency 1.1.
    """
    L, mu, Q, E, nu, f = 65, 0.037, 8.435e-4, 0.058, 10, 1.1
    e_src = float(poisson.sf(nu, L * mu))
    iae10 = cached_iae(L, nu, "unconstrained")

    def rate(leak):
        return (Q * (1 - f * h2(E)) - e_src - (Q - e_src) * leak) / L

    return L65Result(rate(h2(nu / (L - 1))), rate(iae10), iae10)
