"""Saturation-margin cost: minimum Mahalanobis distance to the thrust box faces.

For N modules there are 8N hyperplanes (each motor at its lower or upper
limit). The distance from the input distribution (u_bar, Sigma_u) to one
hyperplane is the solution of a small equality-constrained box QP:

    min (u - u_bar)^T Sigma~^-1 (u - u_bar)   s.t.  u^(k) = u_a,  u_l <= u <= u_h

where Sigma~ adds a trace-proportional ridge so the metric stays defined when
Sigma_u is rank deficient (always the case for 4N > 12). The QP is solved by a
primal active-set iteration in range space: on active set S the minimizer is
u = u_bar + Sigma~[:, S] w with Sigma~[S, S] w matching the bound values, which
makes stationarity on the free coordinates hold by construction and exposes the
Lagrange multipliers directly as w.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .dynamics import LinearModel
from .errors import InfeasibleConstraint, NumericalFailure
from .synthesis import ControlSolution

REG_SCALE = 1e-8
KKT_TOL = 1e-8
_MAX_ACTIVE_SET_ITERS = 200


def regularization_epsilon(sigma_u: np.ndarray) -> float:
    """Ridge added to Sigma_u: 1e-8 * mean diagonal mass (tiny floor when zero)."""
    n = sigma_u.shape[0]
    eps = REG_SCALE * float(np.trace(sigma_u)) / n
    return eps if eps > 0.0 else 1e-12


class MarginEvaluator:
    """Distance queries against a fixed regularized input covariance and box."""

    def __init__(self, sigma_u: np.ndarray, u_min: float, u_max: float):
        sigma_u = np.asarray(sigma_u, dtype=float)
        if u_min >= u_max:
            raise ValueError("need u_min < u_max")
        self.u_min = float(u_min)
        self.u_max = float(u_max)
        self.n = sigma_u.shape[0]
        eps = regularization_epsilon(sigma_u)
        self.sigma = 0.5 * (sigma_u + sigma_u.T) + eps * np.eye(self.n)

    # -- single hyperplane ---------------------------------------------------

    def distance(self, center: np.ndarray, k: int, u_a: float) -> tuple[float, np.ndarray]:
        """Mahalanobis distance from `center` to hyperplane u^(k)=u_a inside the box."""
        center = np.asarray(center, dtype=float)
        if not (self.u_min - 1e-12 <= u_a <= self.u_max + 1e-12):
            raise InfeasibleConstraint(f"bound {u_a} lies outside the box")
        u, support, values, w = self._minimize(center, k, u_a)
        res = self._kkt_residual(u, support, values, w)
        if res > KKT_TOL:
            raise NumericalFailure(f"QP KKT residual {res:.3e} exceeds {KKT_TOL}")
        d2 = float(w @ (self.sigma[np.ix_(support, support)] @ w))
        return float(np.sqrt(max(d2, 0.0))), np.clip(u, self.u_min, self.u_max)

    def kkt_residual(self, center: np.ndarray, k: int, u_a: float) -> float:
        """Certified optimality residual of the face QP (re-solves the face)."""
        center = np.asarray(center, dtype=float)
        u, support, values, w = self._minimize(center, k, u_a)
        return self._kkt_residual(u, support, values, w)

    def _subproblem(self, center, support, values):
        """Minimizer with coordinates in `support` pinned to `values`.

        Returns (u, w): u = center + Sigma~[:, S] w, which zeroes the gradient on
        the complement of S; 2 w are the constraint multipliers. One step of
        iterative refinement keeps the pinned coordinates accurate even when the
        principal submatrix is ill conditioned.
        """
        if len(support) == 1:
            k = support[0]
            w = np.array([(values[0] - center[k]) / self.sigma[k, k]])
            return center + w[0] * self.sigma[:, k], w
        m = self.sigma[np.ix_(support, support)]
        b = values - center[support]
        chol = cho_factor(m, check_finite=False)
        w = cho_solve(chol, b, check_finite=False)
        w = w + cho_solve(chol, b - m @ w, check_finite=False)
        u = center + self.sigma[:, support] @ w
        return u, w

    def _minimize(self, center, k, u_a):
        # Fast path: the equality-only minimizer, valid when inside the box.
        values = np.array([u_a])
        u, w = self._subproblem(center, [k], values)
        if np.all(u >= self.u_min - 1e-12) and np.all(u <= self.u_max + 1e-12):
            return u, [k], values, w
        return self._active_set(center, k, u_a, warm=u)

    def _active_set(self, center, k, u_a, warm=None):
        """Primal active-set iteration on the box-constrained hyperplane QP.

        `warm` seeds the working set with the bounds the unconstrained face
        minimizer violates; wrong guesses are released by the multiplier test.
        """
        u = np.clip(center, self.u_min, self.u_max)
        u[k] = u_a
        active: dict[int, float] = {}
        if warm is not None:
            for j in range(self.n):
                if j == k:
                    continue
                if warm[j] < self.u_min - 1e-12:
                    active[j] = self.u_min
                    u[j] = self.u_min
                elif warm[j] > self.u_max + 1e-12:
                    active[j] = self.u_max
                    u[j] = self.u_max

        for _ in range(_MAX_ACTIVE_SET_ITERS):
            support = [k, *sorted(active)]
            values = np.array([u_a, *(active[j] for j in sorted(active))])
            target, w = self._subproblem(center, support, values)

            # Walk toward the subproblem optimum until a bound blocks the step.
            step = target - u
            step[support] = 0.0
            alpha, blocking = 1.0, None
            for j in np.nonzero(np.abs(step) > 1e-15)[0]:
                if step[j] > 0.0 and u[j] + step[j] > self.u_max:
                    a = (self.u_max - u[j]) / step[j]
                    if a < alpha:
                        alpha, blocking = a, (int(j), self.u_max)
                elif step[j] < 0.0 and u[j] + step[j] < self.u_min:
                    a = (self.u_min - u[j]) / step[j]
                    if a < alpha:
                        alpha, blocking = a, (int(j), self.u_min)
            if blocking is not None:
                u = u + alpha * step
                j, bound = blocking
                u[j] = bound
                active[j] = bound
                continue
            u = target

            # At the subproblem optimum, release the active bound with the most
            # negative multiplier (w_j >= 0 required at lower, <= 0 at upper).
            worst, worst_j = -1e-12 * max(1.0, float(np.max(np.abs(w)))), None
            for idx, j in enumerate(support[1:], start=1):
                mult = w[idx] if active[j] == self.u_min else -w[idx]
                if mult < worst:
                    worst, worst_j = mult, j
            if worst_j is None:
                return u, support, values, w
            del active[worst_j]
            u = np.clip(u, self.u_min, self.u_max)

        raise NumericalFailure("active-set iteration did not converge")

    def _kkt_residual(self, u, support, values, w) -> float:
        """Optimality residual of the primal-dual pair (u, 2w).

        Stationarity holds by construction (u - center lies in the span of the
        support columns of Sigma~), so the residual aggregates feasibility of
        the pinned coordinates, box violations, and multiplier signs.
        """
        box = self.u_max - self.u_min
        res = float(np.max(np.abs(u[support] - values))) / box
        res = max(res, float(np.max(u - self.u_max, initial=0.0)) / box)
        res = max(res, float(np.max(self.u_min - u, initial=0.0)) / box)
        scale = max(1.0, float(np.max(np.abs(w))))
        for idx in range(1, len(support)):
            mult = w[idx] if values[idx] == self.u_min else -w[idx]
            res = max(res, max(0.0, -mult) / scale)
        return res

    # -- all hyperplanes -----------------------------------------------------

    def _fast_batch(self, center):
        """Conditional minimizers and distances for all 2n faces at once.

        Distances are exact for rows whose minimizer stays inside the box and
        lower bounds otherwise (box constraints can only push the minimum up).
        """
        diag = np.diag(self.sigma)
        root = np.sqrt(diag)
        lam = np.stack([(self.u_min - center) / diag, (self.u_max - center) / diag])
        minimizers = center[None, None, :] + lam[:, :, None] * self.sigma[None, :, :]
        dist = np.stack(
            [np.abs(self.u_min - center) / root, np.abs(self.u_max - center) / root], axis=1
        )
        inbox = np.all(
            (minimizers >= self.u_min - 1e-12) & (minimizers <= self.u_max + 1e-12), axis=2
        ).T
        return dist, inbox, minimizers

    def all_distances(self, center: np.ndarray) -> tuple[np.ndarray, list]:
        """(n, 2) distances to every (motor, lower/upper) face plus minimizers."""
        center = np.asarray(center, dtype=float)
        dist, inbox, fast_min = self._fast_batch(center)
        dist = dist.copy()
        fast_min = np.clip(fast_min, self.u_min, self.u_max)
        minimizers = [
            [fast_min[0, k], fast_min[1, k]] for k in range(self.n)
        ]
        for k, col in zip(*np.nonzero(~inbox)):
            u_a = self.u_min if col == 0 else self.u_max
            d, u = self.distance(center, int(k), u_a)
            dist[k, col] = d
            minimizers[k][col] = u
        return dist, minimizers

    def min_distance(self, center: np.ndarray) -> float:
        """Smallest distance from `center` to any saturation face.

        Exact fast-path faces bound the answer; boxed QPs run only for faces
        whose lower bound could still undercut it.
        """
        center = np.asarray(center, dtype=float)
        dist, inbox, _ = self._fast_batch(center)
        flat = dist.ravel()
        exact = inbox.ravel()
        best = float(np.min(flat[exact])) if np.any(exact) else np.inf
        pending = np.nonzero(~exact)[0]
        for idx in pending[np.argsort(flat[pending], kind="stable")]:
            if flat[idx] >= best:
                break
            k, col = divmod(int(idx), 2)
            d, _ = self.distance(center, k, self.u_min if col == 0 else self.u_max)
            best = min(best, d)
        return best


def hyperplane_distance(
    u_bar: np.ndarray,
    sigma_u: np.ndarray,
    k: int,
    u_a: float,
    u_min: float,
    u_max: float,
) -> tuple[float, np.ndarray]:
    """One-shot distance from (u_bar, Sigma_u) to the face u^(k) = u_a."""
    return MarginEvaluator(sigma_u, u_min, u_max).distance(np.asarray(u_bar, float), k, u_a)


@dataclass(frozen=True)
class RobustnessScore:
    """Minimum saturation margin of a layout and where it is attained.

    `per_hyperplane` is (4N, 2): column 0 distances to the lower face of each
    motor, column 1 to the upper face.
    """

    d_min: float
    active_component: int
    active_bound: str
    minimizer: np.ndarray
    per_hyperplane: np.ndarray


def layout_cost(model: LinearModel, sol: ControlSolution) -> RobustnessScore:
    """Evaluate all 8N faces of the thrust box and return the worst margin.

    Requires a feasible feedforward and a valid synthesis; upstream failures
    (separation, feedforward, Riccati) are mapped to the -inf sentinel by the
    optimizer's candidate evaluation, not here.
    """
    ev = MarginEvaluator(sol.sigma_u, model.thrust_min, model.thrust_max)
    dist, minimizers = ev.all_distances(model.u_bar)
    k, col = np.unravel_index(int(np.argmin(dist)), dist.shape)
    return RobustnessScore(
        d_min=float(dist[k, col]),
        active_component=int(k),
        active_bound="lower" if col == 0 else "upper",
        minimizer=minimizers[k][col],
        per_hyperplane=dist,
    )


def feasibility_probability_oracle(
    u_bar: np.ndarray,
    sigma_u: np.ndarray,
    u_min: float,
    u_max: float,
    n_samples: int,
    seed: int,
) -> float:
    """Monte-Carlo estimate of P(u inside the box) for u ~ N(u_bar, Sigma~).

    The sampling objective the Mahalanobis margin stands in for; kept as a
    validation oracle only.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    u_bar = np.asarray(u_bar, dtype=float)
    n = len(u_bar)
    sigma = np.asarray(sigma_u, dtype=float)
    sigma = 0.5 * (sigma + sigma.T) + regularization_epsilon(sigma) * np.eye(n)
    chol = np.linalg.cholesky(sigma)
    rng = np.random.default_rng(seed)
    samples = u_bar + rng.standard_normal((n_samples, n)) @ chol.T
    inside = np.all((samples >= u_min) & (samples <= u_max), axis=1)
    return float(np.mean(inside))
