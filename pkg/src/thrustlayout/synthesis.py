"""H2/LQR synthesis: Riccati solution, feedback gain, closed-loop covariance.

The controller minimizes the integral of z^T z for z = C x' + D u' under
white-noise disturbance. The default weights penalize payload position (0.5 on
x/y, 10 on z), yaw (50), and the inputs (identity). The disturbance matrix
defaults to the model's physical wrench Jacobian with unit gains on the six
force/torque channels, so the closed-loop covariance inherits the placement
through the system inertia; an explicit 12x6 matrix can be supplied instead
(e.g. the unit-entry pattern that injects accelerations directly).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, schur, solve_continuous_lyapunov

from .dynamics import LinearModel
from .errors import IllConditioned, NotHurwitz, NotStabilizable

RESIDUAL_RTOL = 1e-8

#: (row, col) slots of the unit disturbance pattern: three force channels into
#: the velocity rows, three torque channels into the body-rate rows.
_BD_PATTERN = ((3, 0), (4, 1), (5, 2), (9, 3), (10, 4), (11, 5))


def default_output_weight(n_quads: int) -> np.ndarray:
    """(4 + 4N) x 12 output weight: x/y at 0.5, z at 10, yaw at 50."""
    c = np.zeros((4 + 4 * n_quads, 12))
    c[0, 0] = 0.5
    c[1, 1] = 0.5
    c[2, 2] = 10.0
    c[3, 8] = 50.0
    return c


def default_input_weight(n_quads: int) -> np.ndarray:
    """(4 + 4N) x 4N input weight: zeros stacked on the identity."""
    d = np.zeros((4 + 4 * n_quads, 4 * n_quads))
    d[4:, :] = np.eye(4 * n_quads)
    return d


def unit_disturbance_matrix(bd_gain=None) -> np.ndarray:
    """12 x 6 matrix with one entry per channel: direct acceleration injection.

    This pattern weighs the six disturbance components equally in state-rate
    units and carries no placement dependence; usable as an explicit override.
    """
    gain = np.ones(6) if bd_gain is None else np.asarray(bd_gain, dtype=float)
    bd = np.zeros((12, 6))
    for (row, col), g in zip(_BD_PATTERN, gain):
        bd[row, col] = g
    return bd


@dataclass(frozen=True)
class WeightConfig:
    """Synthesis weights: output matrix C, input matrix D, disturbance channel gains.

    With `bd_override` unset, the disturbance matrix is the model's physical
    wrench Jacobian with its six columns scaled by `bd_gain`; otherwise the
    override matrix is used verbatim.
    """

    c: np.ndarray
    d: np.ndarray
    bd_gain: np.ndarray = None
    bd_override: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        d = np.asarray(self.d, dtype=float)
        if c.shape[1] != 12:
            raise ValueError("C must have 12 columns")
        if c.shape[0] != d.shape[0]:
            raise ValueError("C and D must have matching row counts")
        r = d.T @ d
        if np.linalg.matrix_rank(r) < r.shape[0]:
            raise ValueError("D^T D must be invertible")
        gain = np.ones(6) if self.bd_gain is None else np.asarray(self.bd_gain, dtype=float)
        if gain.shape != (6,) or np.any(gain <= 0.0):
            raise ValueError("bd_gain must be 6 positive scalars")
        if self.bd_override is not None:
            bd = np.asarray(self.bd_override, dtype=float)
            if bd.shape != (12, 6):
                raise ValueError("bd_override must have shape (12, 6)")
            object.__setattr__(self, "bd_override", bd)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "bd_gain", gain)

    @classmethod
    def default(cls, n_quads: int, bd_gain=None) -> "WeightConfig":
        return cls(
            c=default_output_weight(n_quads),
            d=default_input_weight(n_quads),
            bd_gain=bd_gain,
        )

    def disturbance_matrix(self, model: LinearModel) -> np.ndarray:
        if self.bd_override is not None:
            return self.bd_override
        return model.bd * self.bd_gain


def solve_care(a: np.ndarray, b: np.ndarray, q: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Stabilizing solution of A^T S + S A - S B R^-1 B^T S + Q = 0.

    The stable invariant subspace of the Hamiltonian is extracted from an
    ordered real Schur form, followed by one Newton refinement step; the result
    is certified against the Riccati residual.
    """
    n = a.shape[0]
    g = b @ cho_solve(cho_factor(r), b.T)
    ham = np.block([[a, -g], [-q, -a.T]])
    t, z, sdim = schur(ham, output="real", sort="lhp")
    if sdim != n:
        raise NotStabilizable(
            f"stable Hamiltonian subspace has dimension {sdim}, expected {n}"
        )
    u1 = z[:n, :n]
    u2 = z[n:, :n]
    try:
        s = np.linalg.solve(u1.T, u2.T).T
    except np.linalg.LinAlgError as exc:
        raise NotStabilizable("singular basis block in the stable subspace") from exc
    s = 0.5 * (s + s.T)

    # One Newton step: solve the Lyapunov equation of the residual about A - G S.
    res = a.T @ s + s @ a - s @ g @ s + q
    a_cl = a - g @ s
    try:
        delta = solve_continuous_lyapunov(a_cl.T, -res)
        s_ref = 0.5 * ((s + delta) + (s + delta).T)
    except np.linalg.LinAlgError:
        s_ref = s
    res_ref = a.T @ s_ref + s_ref @ a - s_ref @ g @ s_ref + q
    if np.linalg.norm(res_ref, "fro") <= np.linalg.norm(res, "fro"):
        s, res = s_ref, res_ref

    if np.linalg.norm(res, "fro") > RESIDUAL_RTOL * max(np.linalg.norm(q, "fro"), 1e-300):
        raise IllConditioned(
            f"Riccati residual {np.linalg.norm(res, 'fro'):.3e} exceeds tolerance"
        )
    return s


def solve_lyapunov(a: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Solution of A X + X A^T + Q = 0 (Bartels-Stewart), residual-certified."""
    x = solve_continuous_lyapunov(a, -q)
    x = 0.5 * (x + x.T)
    res = a @ x + x @ a.T + q
    if np.linalg.norm(res, "fro") > RESIDUAL_RTOL * max(np.linalg.norm(q, "fro"), 1e-300):
        raise IllConditioned(
            f"Lyapunov residual {np.linalg.norm(res, 'fro'):.3e} exceeds tolerance"
        )
    return x


def lqr_gain(model: LinearModel, weights: WeightConfig) -> tuple[np.ndarray, np.ndarray]:
    """Optimal feedback gain K = (D^T D)^-1 B^T S1 and the Riccati solution S1."""
    q = weights.c.T @ weights.c
    r = weights.d.T @ weights.d
    s1 = solve_care(model.a, model.b, q, r)
    k = cho_solve(cho_factor(r), model.b.T @ s1)
    return k, s1


def closed_loop_covariance(a_f: np.ndarray, bd: np.ndarray) -> np.ndarray:
    """Steady-state state covariance: A_f S2 + S2 A_f^T + Bd Bd^T = 0."""
    eig = np.linalg.eigvals(a_f)
    if np.max(eig.real) >= 0.0:
        raise NotHurwitz(f"closed-loop spectral abscissa {np.max(eig.real):.3e} >= 0")
    return solve_lyapunov(a_f, bd @ bd.T)


def h2_cost(s1: np.ndarray, bd: np.ndarray) -> float:
    """Optimal cost trace(Bd^T S1 Bd): steady-state E[z^T z] under unit white noise."""
    return float(np.trace(bd.T @ s1 @ bd))


def input_covariance(k: np.ndarray, s2: np.ndarray) -> np.ndarray:
    """Covariance K S2 K^T of the feedback inputs u' = -K x'."""
    sigma = k @ s2 @ k.T
    return 0.5 * (sigma + sigma.T)


@dataclass(frozen=True)
class ControlSolution:
    """Synthesis bundle: Riccati solution, gain, covariances, cost, closed loop."""

    s1: np.ndarray
    k_gain: np.ndarray
    s2: np.ndarray
    sigma_u: np.ndarray
    j_star: float
    a_f: np.ndarray
    bd: np.ndarray


def synthesize(model: LinearModel, weights: WeightConfig | None = None) -> ControlSolution:
    """Full H2 synthesis for a linear model under the given (or default) weights."""
    if weights is None:
        weights = WeightConfig.default(model.n_quads)
    k, s1 = lqr_gain(model, weights)
    a_f = model.a - model.b @ k
    bd = weights.disturbance_matrix(model)
    s2 = closed_loop_covariance(a_f, bd)
    return ControlSolution(
        s1=s1,
        k_gain=k,
        s2=s2,
        sigma_u=input_covariance(k, s2),
        j_star=h2_cost(s1, bd),
        a_f=a_f,
        bd=bd.copy(),
    )
