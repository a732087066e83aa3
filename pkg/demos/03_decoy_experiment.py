"""
Key rates from measured data
============================

Three-intensity decoy estimation turns the observed gains and error rates of
an L = 3 experiment into single-photon estimates, and from those into key
rates with and without the error-rate constraint. A second calculation
revisits a published L = 65 experiment with the new leakage bound.
"""

from rrdps import (
    DecoyEstimationError,
    DecoyIntensities,
    DecoyObservations,
    estimate_single_photon,
    experimental_key_rate,
    recompute_L65_experiment,
)

##############################################################################
# Decoy estimation
# ----------------
# Intensities are photons per pulse: 0.13 signal, 0.03 decoy, 0.0003 vacuum.

intens = DecoyIntensities(mu_signal=0.13, mu_decoy=0.03, mu_vacuum=0.0003, L=3)
runs = {
    50: DecoyObservations(Q_s=3.24e-3, E_s=0.0176, Q_d=7.52e-4, E_d=0.0195, Q_v=1.12e-5),
    100: DecoyObservations(Q_s=3.28e-4, E_s=0.0226, Q_d=7.86e-5, E_d=0.0401, Q_v=4.50e-6),
    140: DecoyObservations(Q_s=5.52e-5, E_s=0.0499, Q_d=1.56e-5, E_d=0.1331, Q_v=3.87e-6),
}


def show(rate):
    return "--" if rate is None else f"{rate:.3e}"


for km, obs in runs.items():
    try:
        est = estimate_single_photon(intens, obs)
    except DecoyEstimationError as exc:
        print(f"{km} km: {exc}")
        continue
    R1 = experimental_key_rate(intens, obs, est, "R1")
    R2 = experimental_key_rate(intens, obs, est, "R2")
    print(f"{km:3d} km  Y1={est.Y1:.3e}  E1={est.E1:.4f}  R1={show(R1)}  R2={show(R2)}")

##############################################################################
# A longer packet
# ---------------
# Same measured data, ten-photon tagging threshold, two leakage bounds.

res = recompute_L65_experiment()
print(f"L=65: R1={res.R1:.2e} (old bound)  R2={res.R2:.3e} (new bound, I={res.iae10:.3f})")
