"""Independent oracles used to derive expected values.

Each oracle deliberately avoids the implementation path it checks: boundary
hits come from point-membership bisection rather than segment intersection,
inertia from a triangle-fan decomposition rather than shoelace moments, linear
covariances from exact matrix-exponential discretization rather than Lyapunov
solves, and QP distances from dense grids.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm

from thrustlayout.payload import point_in_polygon


def boundary_radius_by_bisection(vertices: np.ndarray, angle: float, n_scan: int = 4001) -> float:
    """Outermost material-to-void transition along a centroid ray."""
    direction = np.array([np.cos(angle), np.sin(angle)])
    t_max = 2.0 * float(np.max(np.linalg.norm(vertices, axis=1)))
    ts = np.linspace(0.0, t_max, n_scan)
    inside = np.array([point_in_polygon(t * direction, vertices) for t in ts])
    idx = int(np.max(np.nonzero(inside)[0]))
    lo, hi = ts[idx], ts[min(idx + 1, n_scan - 1)]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if point_in_polygon(mid * direction, vertices):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def triangle_fan_moments(vertices: np.ndarray) -> tuple[float, float]:
    """(integral y^2 dA, integral x^2 dA) via signed triangle fan about the origin.

    For a triangle (0, P, Q): integral x^2 dA = (A/6) (Px^2 + Px Qx + Qx^2).
    """
    ix = iy = 0.0
    n = len(vertices)
    for i in range(n):
        p = vertices[i]
        q = vertices[(i + 1) % n]
        a = 0.5 * (p[0] * q[1] - q[0] * p[1])
        iy += a / 6.0 * (p[0] * p[0] + p[0] * q[0] + q[0] * q[0])
        ix += a / 6.0 * (p[1] * p[1] + p[1] * q[1] + q[1] * q[1])
    return ix, iy


def finite_difference_jacobians(f, x0, u0, d0, h=1e-6):
    """Central-difference Jacobians of f(x, u, d) at (x0, u0, d0)."""

    def jac(arg_index, v0):
        rows = len(f(x0, u0, d0))
        out = np.zeros((rows, len(v0)))
        for j in range(len(v0)):
            e = np.zeros(len(v0))
            e[j] = h
            args_p = [x0, u0, d0]
            args_m = [x0, u0, d0]
            args_p[arg_index] = v0 + e
            args_m[arg_index] = v0 - e
            out[:, j] = (f(*args_p) - f(*args_m)) / (2.0 * h)
        return out

    return jac(0, x0), jac(1, u0), jac(2, d0)


def exact_discretization(a: np.ndarray, q: np.ndarray, dt: float):
    """(Ad, Qd) of dx = a x dt + dw, E[dw dw^T] = q dt, over a step dt.

    Van Loan's block-exponential; Qd is the integral of e^{a s} q e^{a^T s} ds.
    """
    n = a.shape[0]
    block = np.zeros((2 * n, 2 * n))
    block[:n, :n] = -a
    block[:n, n:] = q
    block[n:, n:] = a.T
    eb = expm(block * dt)
    ad = eb[n:, n:].T
    qd = ad @ eb[:n, n:]
    return ad, 0.5 * (qd + qd.T)


def linear_stationary_montecarlo(a_f, bd, t_total, dt, seed, observe=None, burn=10.0):
    """Stationary statistics of dx = a_f x dt + bd dW by exact discretization.

    Returns (empirical covariance of x, mean of |z|^2) where z = observe @ x
    (observe optional). The discretization is exact, so only Monte-Carlo error
    remains.
    """
    n = a_f.shape[0]
    ad, qd = exact_discretization(a_f, bd @ bd.T, dt)
    w, v = np.linalg.eigh(qd)
    chol = v @ np.diag(np.sqrt(np.clip(w, 0.0, None)))
    rng = np.random.default_rng(seed)
    steps = int(round(t_total / dt))
    skip = int(round(burn / dt))
    x = np.zeros(n)
    cov = np.zeros((n, n))
    z2 = 0.0
    count = 0
    for i in range(steps):
        x = ad @ x + chol @ rng.standard_normal(n)
        if i >= skip:
            cov += np.outer(x, x)
            if observe is not None:
                z = observe @ x
                z2 += float(z @ z)
            count += 1
    cov /= count
    return cov, (z2 / count if observe is not None else None)


def grid_hyperplane_distance(sigma, center, u_min, u_max, k, u_a, n_grid=400):
    """Dense-grid minimum Mahalanobis distance on the face u[k] = u_a (2-D only)."""
    assert sigma.shape == (2, 2)
    prec = np.linalg.inv(sigma)
    free = 1 - k
    grid = np.linspace(u_min, u_max, n_grid)
    best = np.inf
    for val in grid:
        u = np.empty(2)
        u[k] = u_a
        u[free] = val
        diff = u - center
        best = min(best, float(diff @ prec @ diff))
    return np.sqrt(best)
