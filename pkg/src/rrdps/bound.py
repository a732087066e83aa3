"""
Bounds on the eavesdropper's information per sifted key bit in RRDPS QKD.

For an ``L``-pulse packet carrying ``N`` photons (``L >= N + 1``) the leaked
information is bounded by maximising

    sum_{n=1}^{N} phi((L - n) x_n, n x_{n+1}) / (L - 1)

over the probability simplex ``x = (x_1, ..., x_{N+1})``. When the bit error
rate ``E`` is monitored the weights must also keep an error floor (a sum of
squared differences of square roots plus a trailing linear term) below ``E``.

The objective is a sum of concave, 1-homogeneous ``phi`` terms composed with
linear maps, hence concave. Each squared-difference term of the floor equals
``A p + B q - 2 sqrt(A B p q)``, and the geometric mean ``sqrt(p q)`` is
concave, so the floor is convex and the constrained feasible set is convex as
well. Both problems are therefore convex programs and are solved with a
log-barrier interior-point method. At ``E = 0`` the feasible set is a face of
the simplex on which every squared difference vanishes; the search is
restricted to that face explicitly.

The original bound ``h2(N / (L - 1))`` is provided for comparison.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from rrdps._solver import maximize_on_simplex
from rrdps.entropy import NEG_DUST, h2, h2_inverse, phi

_LN2 = math.log(2.0)


class BoundMode(str, enum.Enum):
    ORIGINAL = "original"
    UNCONSTRAINED = "unconstrained"
    CONSTRAINED = "constrained"


@dataclass(frozen=True)
class BoundQuery:
    """Inputs of a leakage bound: packet length, photon number, optional QBER."""

    L: int
    N: int
    mode: BoundMode = BoundMode.UNCONSTRAINED
    error_rate: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "mode", BoundMode(self.mode))
        if self.L < 2:
            raise ValueError(f"packet length L must be >= 2, got {self.L}")
        if self.N < 1:
            raise ValueError(f"photon number N must be >= 1, got {self.N}")
        if self.mode is not BoundMode.ORIGINAL and self.L < self.N + 1:
            raise ValueError(f"the bound requires L >= N + 1 (got L={self.L}, N={self.N})")
        if self.mode is BoundMode.CONSTRAINED:
            if self.error_rate is None:
                raise ValueError("constrained mode needs an error rate")
            if not -NEG_DUST <= self.error_rate <= 0.5 + NEG_DUST:
                raise ValueError(f"error rate must lie in [0, 0.5], got {self.error_rate}")
            object.__setattr__(self, "error_rate", float(min(max(self.error_rate, 0.0), 0.5)))
        elif self.error_rate is not None:
            raise ValueError("error rate is only meaningful in constrained mode")


@dataclass(frozen=True)
class SolverOptions:
    """Interior-point settings. ``starts`` counts the deterministic centre start plus random ones."""

    starts: int = 3
    seed: int = 0
    gap_tol: float = 1e-11
    agree_tol: float = 1e-8


@dataclass(frozen=True)
class BoundResult:
    query: BoundQuery
    iae: float
    argmax: np.ndarray = field(repr=False)
    converged: bool = True
    objective_gap_estimate: float = 0.0


# --------------------------------------------------------------------------
# objective and error floor


def _check_weights(L: int, weights) -> np.ndarray:
    x = np.asarray(weights, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("weights must be a vector of length N + 1 >= 2")
    if L < x.size:
        raise ValueError(f"L={L} is too small for {x.size} weights (needs L >= N + 1)")
    if np.any(x < -NEG_DUST):
        raise ValueError("weights must be non-negative")
    if abs(x.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {x.sum()!r}")
    return np.maximum(x, 0.0)


def eq1_objective(L: int, weights: Sequence[float]) -> float:
    """Leakage objective ``sum_n phi((L-n) x_n, n x_{n+1}) / (L-1)`` at simplex point ``weights``."""
    x = _check_weights(L, weights)
    return _objective(L, x)


def _objective(L: int, x: np.ndarray) -> float:
    n = np.arange(1, x.size)
    return float(np.sum(phi((L - n) * x[:-1], n * x[1:])) / (L - 1))


def _objective_grad_hess(L: int, x: np.ndarray):
    k = x.size
    n = np.arange(1, k)
    a = (L - n).astype(float)
    b = n.astype(float)
    u = a * x[:-1]
    v = b * x[1:]
    s = u + v
    dead = x <= 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        lu = np.log(s / u)
        lv = np.log(s / v)
        huu = -v / (u * s)
        hvv = -u / (v * s)
        huv = 1.0 / s
    grad = np.zeros(k)
    grad[:-1] += a * lu
    grad[1:] += b * lv
    hess = np.zeros((k, k))
    idx = np.arange(k - 1)
    hess[idx, idx] += a * a * huu
    hess[idx + 1, idx + 1] += b * b * hvv
    hess[idx, idx + 1] += a * b * huv
    hess[idx + 1, idx] += a * b * huv
    grad[dead] = 0.0
    hess[dead, :] = 0.0
    hess[:, dead] = 0.0
    scale = 1.0 / ((L - 1) * _LN2)
    return grad * scale, hess * scale


@dataclass(frozen=True)
class _Floor:
    """Error floor ``[sum (sqrt(A p) - sqrt(B q))^2 + c x_last] / (L - 1)``."""

    L: int
    N: int
    p_idx: np.ndarray
    q_idx: np.ndarray
    A: np.ndarray
    B: np.ndarray
    lin_coef: float

    @classmethod
    def build(cls, L: int, N: int) -> "_Floor":
        if N % 2 == 1:
            ns = np.arange(1, (N - 1) // 2 + 1)
            p_idx, q_idx = 2 * ns - 1, 2 * ns  # x_{2n}, x_{2n+1} in 0-based indexing
            A, B = L - 2.0 * ns, 2.0 * ns
        else:
            ns = np.arange(1, N // 2 + 1)
            p_idx, q_idx = 2 * ns - 2, 2 * ns - 1  # x_{2n-1}, x_{2n}
            A, B = L - 2.0 * ns + 1.0, 2.0 * ns - 1.0
        return cls(L, N, p_idx, q_idx, A.astype(float), B.astype(float), (L - N - 1) / 2.0)

    @property
    def trivial(self) -> bool:
        return self.p_idx.size == 0 and self.lin_coef == 0.0

    def __call__(self, x: np.ndarray) -> float:
        p, q = x[self.p_idx], x[self.q_idx]
        sq = (np.sqrt(self.A * p) - np.sqrt(self.B * q)) ** 2
        return float((sq.sum() + self.lin_coef * x[self.N]) / (self.L - 1))

    def grad_hess(self, x: np.ndarray):
        k = x.size
        p, q = x[self.p_idx], x[self.q_idx]
        r = np.sqrt(self.A * self.B)
        grad = np.zeros(k)
        grad[self.p_idx] += self.A - r * np.sqrt(q / p)
        grad[self.q_idx] += self.B - r * np.sqrt(p / q)
        grad[self.N] += self.lin_coef
        hess = np.zeros((k, k))
        hess[self.p_idx, self.p_idx] += 0.5 * r * np.sqrt(q) * p**-1.5
        hess[self.q_idx, self.q_idx] += 0.5 * r * np.sqrt(p) * q**-1.5
        cross = -0.5 * r / np.sqrt(p * q)
        hess[self.p_idx, self.q_idx] += cross
        hess[self.q_idx, self.p_idx] += cross
        return grad / (self.L - 1), hess / (self.L - 1)

    def zero_face(self) -> np.ndarray:
        """Columns spanning the face ``{floor = 0}`` of the simplex (each column sums to 1)."""
        k = self.N + 1
        cols = []
        paired = set(self.p_idx.tolist()) | set(self.q_idx.tolist())
        for i, j, a, b in zip(self.p_idx, self.q_idx, self.A, self.B):
            col = np.zeros(k)
            col[i], col[j] = b / (a + b), a / (a + b)
            cols.append(col)
        for i in range(k):
            if i in paired or (i == self.N and self.lin_coef > 0.0):
                continue
            col = np.zeros(k)
            col[i] = 1.0
            cols.append(col)
        return np.column_stack(cols)


def eq2_error_floor(L: int, N: int, weights: Sequence[float]) -> float:
    """Smallest error rate compatible with simplex point ``weights`` (parity-dependent form)."""
    x = _check_weights(L, weights)
    if x.size != N + 1:
        raise ValueError(f"expected {N + 1} weights for N={N}, got {x.size}")
    return _Floor.build(L, N)(x)


# --------------------------------------------------------------------------
# maximisation


def original_bound(L: int, N: int) -> float:
    """``h2(N / (L - 1))``, or 1 once ``N / (L - 1) >= 1/2`` (no key under the original analysis)."""
    ratio = N / (L - 1)
    return h2(ratio) if ratio < 0.5 else 1.0


def _starts(k: int, opts: SolverOptions):
    rng = np.random.default_rng(opts.seed)
    yield np.full(k, 1.0 / k)
    for _ in range(max(opts.starts, 1) - 1):
        yield rng.dirichlet(np.ones(k))


def iae_bound(query: BoundQuery, opts: Optional[SolverOptions] = None) -> BoundResult:
    """
    Upper bound on the eavesdropper's information per sifted bit.

    Parameters
    ----------
    query : BoundQuery
        Packet length, photon number, mode and (constrained mode only) the
        observed error rate.
    opts : SolverOptions, optional
        Number of starts, seed and target duality gap.

    Returns
    -------
    BoundResult
        ``iae`` clamped to [0, 1], the maximising weights, a convergence flag
        and an estimate of the remaining objective gap (the barrier duality
        gap, or the spread between starts if that is larger).
    """
    opts = opts or SolverOptions()
    L, N = query.L, query.N
    if query.mode is BoundMode.ORIGINAL:
        return BoundResult(query, original_bound(L, N), np.empty(0), True, 0.0)

    k = N + 1
    f = lambda x: _objective(L, x)  # noqa: E731
    f_gh = lambda x: _objective_grad_hess(L, x)  # noqa: E731
    floor = _Floor.build(L, N)
    constrained = query.mode is BoundMode.CONSTRAINED and not floor.trivial
    E = query.error_rate if constrained else 0.0

    if constrained and E == 0.0:
        T = floor.zero_face()
        constrained = False
    else:
        T = np.eye(k)

    if constrained:
        # Feasible starts: mix a point of the zero-floor face (floor = 0) with
        # an interior point, shrinking the interior share until floor < E.
        face = floor.zero_face()
        rng = np.random.default_rng(opts.seed + 1)
        inits = []
        for z in _starts(k, opts):
            w = np.full(face.shape[1], 1.0 / face.shape[1]) if not inits else rng.dirichlet(np.ones(face.shape[1]))
            base = face @ w
            g_z = floor(z)
            theta = 0.5 if g_z <= 0.0 else min(0.5, 0.5 * E / g_z)
            inits.append((1.0 - theta) * base + theta * z)
    else:
        inits = list(_starts(T.shape[1], opts))

    best = None
    values = []
    all_ok = True
    for z0 in inits:
        info = maximize_on_simplex(
            f, f_gh, T, z0,
            g=floor if constrained else None,
            g_gh=floor.grad_hess if constrained else None,
            E=E, gap_tol=opts.gap_tol,
        )
        values.append(info.value)
        all_ok = all_ok and info.converged
        if best is None or info.value > best.value:
            best = info

    x = T @ best.z
    x = np.maximum(x, 0.0)
    x /= x.sum()
    value = _objective(L, x)
    spread = max(values) - min(values)
    converged = all_ok and spread <= opts.agree_tol
    iae = min(max(value, 0.0), 1.0)
    return BoundResult(query, iae, x, converged, max(best.gap_bound, spread))


@lru_cache(maxsize=65536)
def cached_iae(L: int, N: int, mode: str = "unconstrained", error_rate: Optional[float] = None) -> float:
    """Memoised scalar ``iae_bound`` for hot loops (rate sweeps, tolerance searches)."""
    return iae_bound(BoundQuery(L, N, BoundMode(mode), error_rate)).iae


# --------------------------------------------------------------------------
# derived quantities


def tolerant_error(L: int, N: int = 1, mode: BoundMode | str = BoundMode.CONSTRAINED, tol: float = 1e-6) -> Optional[float]:
    """
    Largest error rate in [0, 1/2] at which ``1 - h2(E) - I_AE(E)`` is still non-negative.

    Returns ``None`` when no positive rate exists even at ``E = 0``.
    """
    mode = BoundMode(mode)
    if L < 2 or N < 1:
        raise ValueError("need L >= 2 and N >= 1")
    if mode is BoundMode.ORIGINAL:
        leak = original_bound(L, N)
        return None if leak >= 1.0 else h2_inverse(1.0 - leak)
    if mode is BoundMode.UNCONSTRAINED:
        leak = cached_iae(L, N, "unconstrained")
        return None if leak >= 1.0 else h2_inverse(1.0 - leak)

    def margin(E: float) -> float:
        return 1.0 - h2(E) - cached_iae(L, N, "constrained", E)

    if margin(0.0) < 0.0:
        return None
    lo, hi = 0.0, 0.5
    if margin(hi) >= 0.0:
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if margin(mid) >= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def corollary_check(L: int, N: int) -> bool:
    """True iff the unconstrained bound stays strictly below one bit (expected whenever N <= L - 2)."""
    if L < N + 2:
        raise ValueError(f"the corollary concerns N <= L - 2 (got L={L}, N={N})")
    return cached_iae(L, N, "unconstrained") < 1.0 - 1e-6
