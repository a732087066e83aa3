"""
Log-barrier interior-point ascent for concave objectives on a simplex.

Solves ``max f(T z)`` over ``z >= 0, sum(z) = 1`` optionally subject to a
convex inequality ``g(T z) <= E``. ``T`` maps the search variables onto the
objective's natural coordinates; its columns sum to one so that the image of
the simplex stays on the simplex. Callers pass ``T = I`` for the plain problem
and a tall ``T`` to restrict the search to a face.

Each barrier subproblem is maximised by damped Newton steps on the affine
hull ``sum(z) = 1``; the barrier weight is then shrunk geometrically. For a
concave objective and convex constraint the final duality gap is bounded by
``m * t`` with ``m`` the number of inequality constraints.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

GradHess = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]
Scalar = Callable[[np.ndarray], float]


@dataclass
class SolveInfo:
    z: np.ndarray
    value: float
    gap_bound: float
    newton_steps: int
    converged: bool


def _barrier_value(f, g, T, z, t, E):
    if np.any(z <= 0.0):
        return -np.inf
    x = T @ z
    val = f(x) + t * np.log(z).sum()
    if g is not None:
        slack = E - g(x)
        if slack <= 0.0:
            return -np.inf
        val += t * np.log(slack)
    return val


def _barrier_derivatives(f_gh, g, g_gh, T, z, t, E):
    x = T @ z
    gx, Hx = f_gh(x)
    grad = T.T @ gx + t / z
    hess = T.T @ Hx @ T - np.diag(t / z**2)
    if g is not None:
        slack = E - g(x)
        cg, cH = g_gh(x)
        cgz = T.T @ cg
        grad -= t * cgz / slack
        hess -= t * (T.T @ cH @ T / slack + np.outer(cgz, cgz) / slack**2)
    return grad, hess


def maximize_on_simplex(
    f: Scalar,
    f_gh: GradHess,
    T: np.ndarray,
    z0: np.ndarray,
    g: Optional[Scalar] = None,
    g_gh: Optional[GradHess] = None,
    E: float = 0.0,
    gap_tol: float = 1e-11,
    t0: float = 0.1,
    shrink: float = 0.1,
    newton_tol: float = 1e-13,
    max_newton: int = 100,
) -> SolveInfo:
    """
    Maximise ``f(T z)`` on the simplex from a strictly feasible start ``z0``.

    ``f_gh`` / ``g_gh`` return the gradient and Hessian in the coordinates of
    ``x = T z``. ``z0`` must be strictly positive, sum to one and, if a
    constraint is given, satisfy ``g(T z0) < E``.
    """
    k = T.shape[1]
    z = np.asarray(z0, dtype=float).copy()
    if np.any(z <= 0.0) or abs(z.sum() - 1.0) > 1e-12:
        raise ValueError("start point must be strictly inside the simplex")
    if g is not None and not g(T @ z) < E:
        raise ValueError("start point violates the constraint")
    m = k + (1 if g is not None else 0)

    kkt = np.zeros((k + 1, k + 1))
    kkt[:k, k] = 1.0
    kkt[k, :k] = 1.0
    rhs = np.zeros(k + 1)

    t = t0
    steps = 0
    converged = True
    while True:
        inner_ok = False
        for _ in range(max_newton):
            grad, hess = _barrier_derivatives(f_gh, g, g_gh, T, z, t, E)
            kkt[:k, :k] = hess
            rhs[:k] = -grad
            try:
                d = np.linalg.solve(kkt, rhs)[:k]
            except np.linalg.LinAlgError:
                d = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:k]
            decrement = float(grad @ d)
            if not np.isfinite(decrement):
                break
            if decrement <= 2.0 * newton_tol:
                inner_ok = True
                break
            steps += 1
            base = _barrier_value(f, g, T, z, t, E)
            # Largest step keeping z > 0, then backtrack on Armijo.
            neg = d < 0.0
            alpha = 1.0
            if np.any(neg):
                alpha = min(1.0, 0.99 * float(np.min(-z[neg] / d[neg])))
            accepted = False
            while alpha > 1e-16:
                trial = z + alpha * d
                if _barrier_value(f, g, T, trial, t, E) >= base + 0.25 * alpha * decrement:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                # Rounding floor reached; the decrement is as small as it gets.
                inner_ok = decrement <= 1e-9
                break
            z = trial
            z /= z.sum()
        converged = converged and inner_ok
        if m * t <= gap_tol:
            break
        t *= shrink

    value = f(T @ z)
    return SolveInfo(z=z, value=value, gap_bound=m * t, newton_steps=steps, converged=converged)
