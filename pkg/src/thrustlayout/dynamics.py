"""Rigid-body dynamics of the quadcopter-payload ensemble and its hover linearization.

State vector (12): [p, v, gamma, omega] with world-frame position/velocity,
roll-pitch-yaw attitude (ZYX convention, R = Rz(yaw) Ry(pitch) Rx(roll)) and
body-frame angular velocity. Motion follows

    m v_dot = m g + R e3 T + f_d        (world frame, T = sum of thrusts)
    J w_dot + w x J w = tau + t_d       (body frame)

with per-rotor thrust along body +z and yaw drag torque +/- kappa * u per rotor.
The disturbance force f_d is world-frame, the torque t_d body-frame, both taken
about the system center of mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import Layout, MassProperties, compose_mass_properties
from .errors import GimbalLock, InfeasibleFeedforward, RankDeficientWrenchMap
from .payload import PayloadSpec
from .vehicle import QuadSpec

GRAVITY = 9.81

POS = slice(0, 3)
VEL = slice(3, 6)
ATT = slice(6, 9)
OMEGA = slice(9, 12)

_PITCH_LIMIT = np.pi / 2.0 - 1e-6


@dataclass(frozen=True)
class StateVector:
    """Convenience view of the 12-state [p, v, gamma, omega]."""

    p: np.ndarray
    v: np.ndarray
    gamma: np.ndarray
    omega: np.ndarray

    @classmethod
    def hover(cls, p=(0.0, 0.0, 0.0)) -> "StateVector":
        return cls(np.asarray(p, dtype=float), np.zeros(3), np.zeros(3), np.zeros(3))

    @classmethod
    def from_array(cls, x: np.ndarray) -> "StateVector":
        x = np.asarray(x, dtype=float)
        return cls(x[POS].copy(), x[VEL].copy(), x[ATT].copy(), x[OMEGA].copy())

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.p, self.v, self.gamma, self.omega])


@dataclass(frozen=True)
class DisturbanceWrench:
    """World-frame force plus body-frame torque about the center of mass."""

    force: np.ndarray
    torque: np.ndarray

    @classmethod
    def zero(cls) -> "DisturbanceWrench":
        return cls(np.zeros(3), np.zeros(3))

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.force, self.torque])


def rotation_matrix(gamma: np.ndarray) -> np.ndarray:
    """Body-to-world rotation from roll-pitch-yaw (ZYX)."""
    cr, sr = np.cos(gamma[0]), np.sin(gamma[0])
    cp, sp = np.cos(gamma[1]), np.sin(gamma[1])
    cy, sy = np.cos(gamma[2]), np.sin(gamma[2])
    return np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )


def euler_rate_matrix(gamma: np.ndarray) -> np.ndarray:
    """Map body angular velocity to roll-pitch-yaw rates; identity at hover."""
    if abs(gamma[1]) >= _PITCH_LIMIT:
        raise GimbalLock(f"pitch {gamma[1]:.6f} rad too close to +/-pi/2")
    cr, sr = np.cos(gamma[0]), np.sin(gamma[0])
    cp, tp = np.cos(gamma[1]), np.tan(gamma[1])
    return np.array(
        [
            [1.0, sr * tp, cr * tp],
            [0.0, cr, -sr],
            [0.0, sr / cp, cr / cp],
        ]
    )


@dataclass(frozen=True)
class Plant:
    """Everything the equations of motion need, with rotors located about the CoM."""

    mass: float
    inertia: np.ndarray
    inertia_inv: np.ndarray
    rotor_xy: np.ndarray  # (4N, 2) rotor positions relative to the system CoM
    spin_signs: np.ndarray  # (4N,) yaw-torque signs
    kappa: float
    torque_map: np.ndarray = None  # (3, 4N) thrusts -> body torque, cached

    def __post_init__(self):
        if self.torque_map is None:
            x, y = self.rotor_xy[:, 0], self.rotor_xy[:, 1]
            tmap = np.stack([y, -x, self.spin_signs * self.kappa])
            object.__setattr__(self, "torque_map", tmap)

    @property
    def n_inputs(self) -> int:
        return len(self.spin_signs)


def build_plant(mp: MassProperties, quad: QuadSpec) -> Plant:
    offsets = quad.rotor_offsets()
    signs = quad.spin_signs()
    n = len(mp.attachment_points)
    rotor_xy = (mp.attachment_points[:, None, :] + offsets[None, :, :]).reshape(-1, 2)
    rotor_xy = rotor_xy - mp.com_offset
    return Plant(
        mass=mp.total_mass,
        inertia=mp.inertia,
        inertia_inv=np.linalg.inv(mp.inertia),
        rotor_xy=rotor_xy,
        spin_signs=np.tile(signs, n),
        kappa=quad.kappa,
    )


def wrench_map(plant: Plant) -> np.ndarray:
    """4 x 4N map from motor thrusts to [total thrust, body torque] about the CoM.

    A thrust u at rotor (x, y) contributes torque (y*u, -x*u, sign*kappa*u).
    """
    return np.vstack([np.ones(plant.n_inputs), plant.torque_map])


def torque_jacobian(plant: Plant) -> np.ndarray:
    """3 x 4N body-torque rows of the wrench map."""
    return plant.torque_map


def nonlinear_derivative(
    x: np.ndarray, u: np.ndarray, d: np.ndarray, plant: Plant
) -> np.ndarray:
    """Time derivative of the 12-state under thrusts `u` and wrench `d`.

    `d` stacks [f_d (world N), t_d (body N m)]. Saturation is the caller's job.
    """
    gamma = x[ATT]
    omega = x[OMEGA]
    rot = rotation_matrix(gamma)
    thrust = u.sum()

    dx = np.empty(12)
    dx[POS] = x[VEL]
    dx[VEL] = rot[:, 2] * (thrust / plant.mass) + d[:3] / plant.mass
    dx[5] -= GRAVITY
    dx[ATT] = euler_rate_matrix(gamma) @ omega
    h = plant.inertia @ omega
    gyro = np.array(
        [
            omega[1] * h[2] - omega[2] * h[1],
            omega[2] * h[0] - omega[0] * h[2],
            omega[0] * h[1] - omega[1] * h[0],
        ]
    )
    dx[OMEGA] = plant.inertia_inv @ (plant.torque_map @ u + d[3:] - gyro)
    return dx


def min_norm_feedforward(
    w: np.ndarray, target: np.ndarray, u_min: float, u_max: float
) -> np.ndarray:
    """Minimum-norm thrusts solving w @ u = target within [u_min, u_max].

    Raises RankDeficientWrenchMap when the map cannot produce all four wrench
    components, InfeasibleFeedforward when the solution exits the box.
    """
    svals = np.linalg.svd(w, compute_uv=False)
    if svals[-1] < 1e-10 * max(svals[0], 1.0):
        raise RankDeficientWrenchMap(
            f"wrench map rank deficient (singular values {svals})"
        )
    u, *_ = np.linalg.lstsq(w, target, rcond=None)
    if np.min(u) < u_min - 1e-12 or np.max(u) > u_max + 1e-12:
        raise InfeasibleFeedforward(u, u_min, u_max)
    return np.clip(u, u_min, u_max)


def feedforward_hover(mp: MassProperties, quad: QuadSpec) -> np.ndarray:
    """Hover thrusts: total thrust balances weight with zero net body torque."""
    plant = build_plant(mp, quad)
    target = np.array([mp.total_mass * GRAVITY, 0.0, 0.0, 0.0])
    return min_norm_feedforward(wrench_map(plant), target, quad.thrust_min, quad.thrust_max)


@dataclass(frozen=True)
class LinearModel:
    """Hover-linearized dynamics x' = A x' + B u' + Bd d with feedforward u_bar.

    `bd` is the physical disturbance Jacobian (1/m and J^-1 blocks); the
    synthesis weights carry their own disturbance matrix.
    """

    a: np.ndarray
    b: np.ndarray
    bd: np.ndarray
    u_bar: np.ndarray
    mass_props: MassProperties
    plant: Plant
    thrust_min: float
    thrust_max: float
    hover_state: np.ndarray

    @property
    def n_inputs(self) -> int:
        return self.b.shape[1]

    @property
    def n_quads(self) -> int:
        return self.n_inputs // 4


def linearize_at_hover(mp: MassProperties, quad: QuadSpec) -> LinearModel:
    """Analytic Jacobians of the nonlinear dynamics at the hover equilibrium.

    A carries only the kinematic couplings and the tilt-gravity terms, so it is
    identical across layouts; B and Bd inherit the layout through the rotor
    lever arms and the inertia.
    """
    u_bar = feedforward_hover(mp, quad)
    plant = build_plant(mp, quad)
    m = plant.mass
    n_u = plant.n_inputs

    a = np.zeros((12, 12))
    a[POS, VEL] = np.eye(3)
    a[3, 7] = GRAVITY  # pitch tilts thrust into +x
    a[4, 6] = -GRAVITY  # roll tilts thrust into -y
    a[ATT, OMEGA] = np.eye(3)

    b = np.zeros((12, n_u))
    b[5, :] = 1.0 / m
    b[OMEGA, :] = plant.inertia_inv @ torque_jacobian(plant)

    bd = np.zeros((12, 6))
    bd[VEL, 0:3] = np.eye(3) / m
    bd[OMEGA, 3:6] = plant.inertia_inv

    return LinearModel(
        a=a,
        b=b,
        bd=bd,
        u_bar=u_bar,
        mass_props=mp,
        plant=plant,
        thrust_min=quad.thrust_min,
        thrust_max=quad.thrust_max,
        hover_state=np.zeros(12),
    )


def model_for_layout(
    payload: PayloadSpec,
    quad: QuadSpec,
    layout: Layout,
    min_separation: float | None = None,
) -> LinearModel:
    """Compose mass properties for a layout and linearize about hover."""
    mp = compose_mass_properties(payload, quad, layout, min_separation)
    return linearize_at_hover(mp, quad)
