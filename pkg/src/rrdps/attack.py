"""
Explicit single-photon collective attacks and their exact leakage.

Eve maps time bin ``i`` to ``sum_j c[i, j] |j>|e_ij>`` (the remaining norm
goes to vacuum). Ancilla states are unit vectors of an abstract orthonormal
family: ``ancilla_assignment[i, j]`` is the index of ``|e_ij>``, so equal
indices mean identical states and distinct indices orthogonal ones.

For a pair of interfering bins ``(a, b)`` the conditional ancilla states
given Alice's parity bit are built after phase randomisation, and Eve's
information is their Holevo quantity. Everything is 0-based.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np

from rrdps.bound import BoundMode, BoundQuery, iae_bound
from rrdps.entropy import phi, von_neumann_entropy

SLACK = 1e-9
# Pairs whose yield is below this carry no detections and are skipped.
YIELD_FLOOR = 1e-14


@dataclass(frozen=True)
class AttackSpec:
    """
    A single-photon collective attack.

    Parameters
    ----------
    c : (L, L) array_like
        Non-negative amplitudes with squared row norms at most 1.
    ancilla_assignment : (L, L) array_like of int
        Ancilla index for each ``(i, j)``. Within one output column ``j`` the
        rows with ``c[i, j] > 0`` must use distinct indices; otherwise the
        images of orthogonal inputs overlap and the map is not an isometry.
    """

    c: np.ndarray
    ancilla_assignment: np.ndarray = field(default=None)

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise ValueError("c must be a square matrix of size L >= 2")
        if np.any(~np.isfinite(c)) or np.any(c < 0):
            raise ValueError("c must be finite and non-negative")
        if np.any((c**2).sum(axis=1) > 1.0 + 1e-12):
            raise ValueError("each row of c must have squared norm <= 1")
        L = c.shape[0]
        lab = self.ancilla_assignment
        lab = np.arange(L * L).reshape(L, L) if lab is None else np.array(lab, dtype=int)
        if lab.shape != c.shape:
            raise ValueError("ancilla_assignment must have the same shape as c")
        for j in range(L):
            used = lab[c[:, j] > 0, j]
            if len(np.unique(used)) != len(used):
                raise ValueError(f"column {j}: inputs sharing an ancilla would not stay orthogonal")
        c.setflags(write=False)
        lab.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "ancilla_assignment", lab)

    @property
    def L(self) -> int:
        return self.c.shape[0]

    @property
    def x1(self) -> float:
        return float(np.sum(np.diag(self.c) ** 2))

    @property
    def x2(self) -> float:
        return float(np.sum(self.c**2) - self.x1)


class PairMetrics(NamedTuple):
    yield_Q: float
    error_E: float
    holevo_I: float
    phi_form: float


@dataclass(frozen=True)
class AttackMetrics:
    per_pair: dict
    aggregate_E: float
    aggregate_I: float
    x1: float
    x2: float


def _pair_vectors(spec: AttackSpec, a: int, b: int):
    """Ancilla vectors ``c_ij |e_ij>`` for columns a and b in a local basis."""
    lab = spec.ancilla_assignment
    local = {k: n for n, k in enumerate(np.unique(np.concatenate([lab[:, a], lab[:, b]])))}
    dim = len(local)
    va = np.zeros((spec.L, dim))
    vb = np.zeros((spec.L, dim))
    for i in range(spec.L):
        va[i, local[lab[i, a]]] = spec.c[i, a]
        vb[i, local[lab[i, b]]] = spec.c[i, b]
    return va, vb


def _check_pair(spec, a, b):
    if not (0 <= a < spec.L and 0 <= b < spec.L and a != b):
        raise IndexError(f"need two distinct bins in [0, {spec.L - 1}], got ({a}, {b})")


def eve_states(spec: AttackSpec, a: int, b: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Unnormalised ancilla states given parity 0 and parity 1 for the pair ``(a, b)``.

    Both have trace ``sum_i c[i, a]**2 + c[i, b]**2``. Matrix dimension is
    the number of distinct ancillas used by columns ``a`` and ``b`` (at most 2L).
    """
    _check_pair(spec, a, b)
    return _states(spec, a, b, *_pair_vectors(spec, a, b))


def _states(spec, a, b, va, vb):
    alpha, beta, gamma, delta = va[a], va[b], vb[a], vb[b]
    others = [i for i in range(spec.L) if i not in (a, b)]
    rest = va[others].T @ va[others] + vb[others].T @ vb[others]
    rho0 = np.outer(alpha + beta, alpha + beta) + np.outer(delta + gamma, delta + gamma) + rest
    rho1 = np.outer(alpha - beta, alpha - beta) + np.outer(delta - gamma, delta - gamma) + rest
    return rho0, rho1


def _pair_metrics(spec, a, b) -> Optional[PairMetrics]:
    va, vb = _pair_vectors(spec, a, b)
    rho0, rho1 = _states(spec, a, b, va, vb)
    q0, q1 = float(np.trace(rho0)), float(np.trace(rho1))
    total = q0 + q1
    if total < YIELD_FLOOR:
        return None
    # Holevo quantity of the parity ensemble; priors are 1/2 for physical attacks.
    info = von_neumann_entropy((rho0 + rho1) / total)
    for q, rho in ((q0, rho0), (q1, rho1)):
        if q > YIELD_FLOOR:
            info -= q / total * von_neumann_entropy(rho / q)
    others = [i for i in range(spec.L) if i not in (a, b)]
    # Wrong-detector probabilities summed over both parities.
    wrong = (
        np.sum((va[a] - vb[b]) ** 2)
        + np.sum((va[b] - vb[a]) ** 2)
        + np.sum(spec.c[others, a] ** 2 + spec.c[others, b] ** 2)
    )
    c2 = spec.c**2
    Q = q0
    form = (phi(c2[b, a], c2[a, a]) + phi(c2[a, b], c2[b, b])) / Q
    return PairMetrics(Q, float(min(max(wrong / total, 0.0), 1.0)), float(min(max(info, 0.0), 1.0)), float(form))


def attack_metrics(spec: AttackSpec) -> AttackMetrics:
    """
    Per-pair yields, error rates and Holevo information, plus their yield-weighted averages.

    Raises
    ------
    ValueError
        If no pair has a positive yield (for example ``c == 0``).
    """
    per_pair = {}
    for a, b in itertools.combinations(range(spec.L), 2):
        m = _pair_metrics(spec, a, b)
        if m is not None:
            per_pair[(a, b)] = m
    if not per_pair:
        raise ValueError("attack produces no detections; metrics are undefined")
    Q = np.array([m.yield_Q for m in per_pair.values()])
    E = np.array([m.error_E for m in per_pair.values()])
    I = np.array([m.holevo_I for m in per_pair.values()])
    total = Q.sum()
    return AttackMetrics(per_pair, float(Q @ E / total), float(Q @ I / total), spec.x1, spec.x2)


# --------------------------------------------------------------------------
# bound checks


@lru_cache(maxsize=None)
def _unconstrained_x2(L: int) -> float:
    return float(iae_bound(BoundQuery(L, 1, BoundMode.UNCONSTRAINED)).argmax[1])


def single_photon_bound(L: int, E: float) -> float:
    """
    Constrained single-photon bound at error rate ``E``.

    In one dimension the objective is concave in ``x2``, so the constrained
    maximum sits at the unconstrained maximiser or at the constraint edge
    ``x2 = 2 (L-1) E / (L-2)``, whichever is smaller.
    """
    x2 = _unconstrained_x2(L)
    if L > 2:
        x2 = min(x2, 2.0 * (L - 1) * max(E, 0.0) / (L - 2))
    return float(phi((L - 1) * (1.0 - x2), x2)) / (L - 1)


@dataclass
class VerificationReport:
    L: int
    aggregate_E: float
    aggregate_I: float
    bound: float
    jensen_slack: float
    pair_slack: float
    constraint_slack: Optional[float]
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def bound_slack(self) -> float:
        return self.bound - self.aggregate_I


def verify_bound(spec: AttackSpec, metrics: Optional[AttackMetrics] = None) -> VerificationReport:
    """
    Check every step of the single-photon leakage bound on one attack.

    Checks, each with slack 1e-9: (i) the per-pair phi terms sum to at most
    ``phi((L-1) x1, x2)``; (ii) each exact Holevo value is at most its phi
    form; (iii) the error rate meets ``2 (L-1) E / (L-2) >= x2 / (x1 + x2)``
    (skipped for L = 2); (iv) the aggregate information is at most the
    constrained bound at the attack's own error rate. Failures are listed in
    ``violations``; none are expected.
    """
    m = attack_metrics(spec) if metrics is None else metrics
    L, c2 = spec.L, spec.c**2
    violations = []

    pair_sum = sum(
        phi(c2[b, a], c2[a, a]) + phi(c2[a, b], c2[b, b]) for a, b in itertools.combinations(range(L), 2)
    )
    jensen = float(phi((L - 1) * m.x1, m.x2)) - pair_sum
    if jensen < -SLACK:
        violations.append(f"jensen step fails by {-jensen:.3e}")

    pair_slack = min(p.phi_form - p.holevo_I for p in m.per_pair.values())
    if pair_slack < -SLACK:
        bad = [k for k, p in m.per_pair.items() if p.holevo_I > p.phi_form + SLACK]
        violations.append(f"holevo above phi form for pairs {bad}")

    constraint = None
    if L > 2:
        constraint = 2 * (L - 1) * m.aggregate_E / (L - 2) - m.x2 / (m.x1 + m.x2)
        if constraint < -SLACK:
            violations.append(f"error-rate constraint fails by {-constraint:.3e}")

    bound = single_photon_bound(L, min(m.aggregate_E, 0.5))
    if m.aggregate_I > bound + SLACK:
        violations.append(f"information {m.aggregate_I:.12f} exceeds bound {bound:.12f}")

    return VerificationReport(L, m.aggregate_E, m.aggregate_I, bound, jensen, pair_slack, constraint, violations)


# --------------------------------------------------------------------------
# sampling and search


def random_attack(rng: np.random.Generator, L: int) -> AttackSpec:
    """
    Draw a random physical attack.

    Rows of ``c`` are square roots of Dirichlet weights scaled to a norm in
    [0.5, 1], sometimes with random zeros. Ancillas are all distinct, tagged
    by input bin, drawn per column from a shared pool without repeats, or
    (for a diagonal ``c``) all identical.
    """
    c = np.sqrt(rng.dirichlet(np.full(L, rng.uniform(0.1, 2.0)), size=L))
    c *= rng.uniform(0.5, 1.0, size=(L, 1))
    if rng.random() < 0.3:
        c *= rng.random((L, L)) < 0.6
    family = rng.integers(4)
    if family == 0:
        lab = np.arange(L * L).reshape(L, L)
    elif family == 1:
        lab = np.tile(np.arange(L)[:, None], (1, L))
    elif family == 2:
        pool = int(rng.integers(L, L * L + 1))
        lab = np.stack([rng.permutation(pool)[:L] for _ in range(L)], axis=1)
    else:
        c = np.diag(np.diag(c))
        lab = np.zeros((L, L), dtype=int)
    if not np.any(c):
        c[0, 0] = 1.0
    return AttackSpec(c, lab)


class MaxInfoResult(NamedTuple):
    value: float
    bound: float
    gap: float
    best_E: float
    evaluations: int
    searched: bool


def _shared_diagonal_labels(L: int) -> np.ndarray:
    """One common ancilla for every diagonal entry, distinct ones elsewhere."""
    lab = np.arange(1, L * L + 1).reshape(L, L)
    np.fill_diagonal(lab, 0)
    return lab


def _symmetric_attack(L: int, p: float, lab: np.ndarray) -> AttackSpec:
    """Diagonal weight ``p`` and equal off-diagonal spread."""
    c = np.full((L, L), np.sqrt((1.0 - p) / (L - 1)))
    np.fill_diagonal(c, np.sqrt(p))
    return AttackSpec(c, lab)


def brute_force_max_info(L: int, target_E: float, budget: int = 2000, seed: int = 0) -> MaxInfoResult:
    """
    Largest Holevo leakage found among attacks with error rate at most ``target_E``.

    A quarter of the budget scans the symmetric family (diagonal weight
    ``p``, uniform off-diagonal spread) under two ancilla layouts: all
    distinct, or one ancilla shared by the diagonal. The rest is a random
    local search on ``c`` from the best point so far, keeping its layout.
    The result is a lower estimate of the true maximum; ``gap`` is the
    distance to the analytic bound.
    """
    if L < 3:
        raise ValueError("L must be >= 3")
    if not 0.0 <= target_E <= 0.5:
        raise ValueError("target_E must lie in [0, 0.5]")
    bound = single_photon_bound(L, target_E)
    if budget <= 0:
        return MaxInfoResult(0.0, bound, bound, 0.0, 0, False)
    rng = np.random.default_rng(seed)

    # The identity map with one shared ancilla is disturbance-free with no leakage.
    layouts = (np.arange(L * L).reshape(L, L), _shared_diagonal_labels(L))
    best_c, best_lab = np.eye(L), layouts[1]
    best = (0.0, 0.0)
    evals = 0
    for p in np.linspace(0.0, 1.0, max(budget // 8, 1)):
        for lab in layouts:
            spec = _symmetric_attack(L, p, lab)
            m = attack_metrics(spec)
            evals += 1
            if m.aggregate_E <= target_E and m.aggregate_I > best[0]:
                best, best_c, best_lab = (m.aggregate_I, m.aggregate_E), spec.c.copy(), lab

    step = 0.2
    while evals < budget:
        trial = np.abs(best_c + step * rng.standard_normal((L, L)) * (rng.random((L, L)) < 0.5))
        norms = np.sqrt((trial**2).sum(axis=1, keepdims=True))
        trial = trial / np.maximum(norms, 1.0)
        evals += 1
        if not np.any(trial):
            continue
        try:
            m = attack_metrics(AttackSpec(trial, best_lab))
        except ValueError:
            continue
        if m.aggregate_E <= target_E and m.aggregate_I > best[0]:
            best, best_c = (m.aggregate_I, m.aggregate_E), trial
        else:
            step = max(step * 0.995, 1e-4)
    return MaxInfoResult(best[0], bound, bound - best[0], best[1], evals, True)
