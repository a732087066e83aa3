"""
How much can Eve learn from one RRDPS packet?
=============================================

A packet spreads N photons over L pulses. The leakage bound is a concave
maximisation over N + 1 simplex weights, optionally restricted by the
observed bit error rate E. This script compares the old closed-form bound
with the new one and reproduces the tolerant-error table.
"""

from rrdps import BoundMode, BoundQuery, iae_bound, original_bound, tolerant_error

##############################################################################
# Single photons, short packets
# -----------------------------
# For L = 3 the old bound is h2(1/2) = 1: no key at all. The new bound is
# well below one bit, and monitoring the error rate tightens it further.

for L in (3, 5, 16):
    new = iae_bound(BoundQuery(L, 1, BoundMode.UNCONSTRAINED))
    print(f"L={L:2d}  original {original_bound(L, 1):.4f}  new {new.iae:.4f}  weights {new.argmax.round(4)}")

for E in (0.0, 0.02, 0.05, 0.1):
    res = iae_bound(BoundQuery(3, 1, BoundMode.CONSTRAINED, E))
    print(f"L=3, E={E:.2f}: leakage <= {res.iae:.4f}")

##############################################################################
# Many photons
# ------------
# With ten photons in a 65-pulse packet the old bound h2(10/64) is about
# 0.625 bits; the new one is about 0.513.

res = iae_bound(BoundQuery(65, 10, BoundMode.UNCONSTRAINED))
print(f"L=65, N=10: original {original_bound(65, 10):.4f}, new {res.iae:.4f} (converged={res.converged})")

##############################################################################
# Tolerant error rates
# --------------------
# The largest E with 1 - h2(E) - I(E) >= 0. "--" marks no key at any E.

print(f"{'L':>3} {'original':>9} {'new':>9} {'new+E':>9}")
for L in (3, 5, 16, 32, 64):
    cells = [tolerant_error(L, 1, m) for m in BoundMode]
    print(f"{L:>3} " + " ".join(f"{c:9.4f}" if c is not None else f"{'--':>9}" for c in cells))
