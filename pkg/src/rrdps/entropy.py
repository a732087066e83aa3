"""
Elementary information-theoretic functions, all in bits.

The limit convention ``0 * log2(0) = 0`` is used throughout so that
functions stay finite at the corners of a probability simplex.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

# Upstream arithmetic (simplex projections, sums of cancelling terms) can
# leave tiny negative dust; anything closer to zero than this is treated as 0.
NEG_DUST = 1e-15

_LN2 = np.log(2.0)

# Eigenvalues below this are dropped before p*log2(p).
EIG_FLOOR = 1e-14


def _clean(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if np.any(np.isnan(arr)):
        raise ValueError(f"{name} is NaN")
    if np.any(arr < -NEG_DUST):
        raise ValueError(f"{name} must be non-negative, got {value!r}")
    return np.where(arr < 0.0, 0.0, arr)


def xlog2x(t):
    """Elementwise ``t * log2(t)`` with the value 0 at ``t = 0``."""
    t = np.asarray(t, dtype=float)
    safe = np.where(t > 0.0, t, 1.0)
    out = np.where(t > 0.0, t * np.log2(safe), 0.0)
    return out if out.ndim else float(out)


def h2(p):
    """
    Binary entropy ``-p log2 p - (1-p) log2(1-p)``.

    Parameters
    ----------
    p : float or array_like
        Probability in [0, 1].

    Returns
    -------
    float or ndarray
        Entropy in bits, in [0, 1].

    Raises
    ------
    ValueError
        If any ``p`` lies outside [0, 1] (beyond 1e-15 rounding dust).

    Examples
    --------
    >>> h2(0.5)
    1.0
    >>> round(h2(0.25), 6)
    0.811278
    """
    arr = _clean(p, "p")
    if np.any(arr > 1.0 + NEG_DUST):
        raise ValueError(f"p must lie in [0, 1], got {p!r}")
    arr = np.minimum(arr, 1.0)
    out = -xlog2x(arr) - xlog2x(1.0 - arr)
    return out if np.ndim(out) else float(out)


def h2_inverse(y: float) -> float:
    """Return the unique ``p`` in [0, 1/2] with ``h2(p) == y``."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"h2 takes values in [0, 1], got {y!r}")
    if y == 0.0:
        return 0.0
    if y == 1.0:
        return 0.5
    return brentq(lambda p: h2(p) - y, 0.0, 0.5, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def phi(x, y):
    """
    ``phi(x, y) = -x log2 x - y log2 y + (x + y) log2(x + y)``.

    Equivalently ``(x + y) * h2(x / (x + y))``: the information carried by
    a two-outcome mixture with unnormalised weights ``x`` and ``y``. It is
    symmetric, jointly concave, 1-homogeneous and bounded by ``x + y``.
    """
    xa, ya = np.broadcast_arrays(_clean(x, "x"), _clean(y, "y"))
    # x log2(1 + y/x) + y log2(1 + x/y): two non-negative terms, no cancellation.
    out = _log1p_term(xa, ya) + _log1p_term(ya, xa)
    return out if np.ndim(out) else float(out)


def _log1p_term(a, b):
    """``a * log2(1 + b / a)``, using ``log(a + b) - log(a)`` once ``b > a`` so the ratio cannot overflow."""
    safe = np.where(a > 0.0, a, 1.0)
    small = np.log1p(np.minimum(b, safe) / safe)
    large = np.log(safe + b) - np.log(safe)
    return np.where(a > 0.0, a * np.where(b <= safe, small, large) / _LN2, 0.0)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """Entropy in bits of a normalised Hermitian density matrix."""
    w = np.linalg.eigvalsh(rho)
    w = w[w > EIG_FLOOR]
    return float(-(w * np.log2(w)).sum())
