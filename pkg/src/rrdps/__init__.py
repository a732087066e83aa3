"""
Leakage bounds and key rates for round-robin differential-phase-shift QKD.

Modules
-------
entropy
    Binary entropy, the two-weight mixing function ``phi`` and von Neumann entropy.
bound
    Eavesdropper information bounds, tolerant error rates.
rates
    Channel models and asymptotic key rates (RRDPS and BB84).
decoy
    Three-intensity decoy estimation and experimental key rates.
attack
    Explicit single-photon attacks for checking the bound numerically.
cli
    Command-line front end (``rrdps`` / ``python -m rrdps``).
"""

from rrdps.attack import AttackMetrics, AttackSpec, attack_metrics, brute_force_max_info, eve_states, verify_bound
from rrdps.bound import (
    BoundMode,
    BoundQuery,
    BoundResult,
    SolverOptions,
    corollary_check,
    eq1_objective,
    eq2_error_floor,
    iae_bound,
    original_bound,
    tolerant_error,
)
from rrdps.decoy import (
    DecoyEstimates,
    DecoyEstimationError,
    DecoyIntensities,
    DecoyObservations,
    estimate_single_photon,
    experimental_key_rate,
    recompute_L65_experiment,
)
from rrdps.entropy import h2, h2_inverse, phi, von_neumann_entropy
from rrdps.rates import (
    ChannelModel,
    ProtocolConfig,
    RatePoint,
    bb84_key_rate,
    gain_error_no_monitor,
    key_rate_infinite_decoy,
    key_rate_no_monitor,
    q_r,
    sweep,
    yields_with_monitor,
)

__version__ = "0.1.0"
