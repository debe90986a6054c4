"""Closed-loop nonlinear simulation of the assembled system.

The continuous-time feedback u = clamp(u_bar - K x', u_l, u_h) runs with
zero-order hold at a configurable control rate; the rigid-body dynamics are
integrated with fixed-step RK4. Disturbance noise is redrawn once per control
step and scaled by 1/sqrt(hold interval) (white-noise discretization).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .assembly import with_point_mass
from .dynamics import ATT, GRAVITY, POS, LinearModel, Plant, nonlinear_derivative
from .errors import GimbalLock
from .robustness import MarginEvaluator
from .synthesis import ControlSolution

_DEFAULT_NOISE = (0.5, 0.5, 0.5, 0.05, 0.05, 0.05)
_NOISY_KINDS = {"hover_noise", "wind"}
KINDS = ("hover_noise", "wind", "ref_step", "added_mass", "trajectory_circle")

POSITION_LIMIT = 50.0
PITCH_LIMIT = np.pi / 2.0 - 1e-6


@dataclass(frozen=True)
class MassEvent:
    """Disturbance mass rigidly attached mid-flight at a payload-frame point."""

    time: float = 5.0
    mass: float = 0.5
    attach_point: tuple[float, float] = (0.225, 0.225)
    mode: str = "wrench"  # "wrench" leaves m and J unchanged; "full_dynamics" rebuilds them

    def __post_init__(self):
        if self.time < 0.0 or self.mass <= 0.0:
            raise ValueError("mass event needs time >= 0 and mass > 0")
        if self.mode not in ("wrench", "full_dynamics"):
            raise ValueError("mode must be 'wrench' or 'full_dynamics'")


@dataclass(frozen=True)
class CircleTrack:
    diameter: float = 2.0
    height: float = 2.0
    speed: float = 0.5

    def __post_init__(self):
        if self.diameter <= 0.0 or self.speed <= 0.0:
            raise ValueError("circle needs positive diameter and speed")


@dataclass(frozen=True)
class Scenario:
    """One simulation case; unset noise defaults to the kind's convention."""

    kind: str
    duration: float = 60.0
    dt: float = 1e-3
    control_rate: float = 500.0
    noise_intensity: tuple | None = None
    wind_force: tuple[float, float, float] = (1.5, 0.0, 0.0)
    step_offset: tuple[float, float, float] = (1.0, 0.0, 0.0)
    mass_event: MassEvent = field(default_factory=MassEvent)
    circle: CircleTrack = field(default_factory=CircleTrack)
    seed: int = 0
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")
        if not (0.0 < self.dt <= 0.01):
            raise ValueError("dt must lie in (0, 0.01]")
        steps = self.duration / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(steps, 1.0):
            raise ValueError("dt must divide duration")
        hold = (1.0 / self.control_rate) / self.dt
        if self.control_rate <= 0.0 or abs(hold - round(hold)) > 1e-9 or round(hold) < 1:
            raise ValueError("control period must be a positive multiple of dt")
        if self.noise_intensity is None:
            default = _DEFAULT_NOISE if self.kind in _NOISY_KINDS else (0.0,) * 6
            object.__setattr__(self, "noise_intensity", default)
        if len(self.noise_intensity) != 6:
            raise ValueError("noise_intensity needs 6 per-channel values")
        if not self.name:
            object.__setattr__(self, "name", self.kind)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    @property
    def steps_per_control(self) -> int:
        return int(round((1.0 / self.control_rate) / self.dt))


#: RMSE metric order, matching the hover comparison tables.
METRICS = ("x", "y", "z", "yaw", "pitch", "roll")
_METRIC_INDEX = {"x": 0, "y": 1, "z": 2, "yaw": 8, "pitch": 7, "roll": 6}


@dataclass
class SimReport:
    """Recorded closed-loop run: one row per integration step."""

    scenario: Scenario
    t: np.ndarray
    states: np.ndarray
    u_cmd: np.ndarray
    u_sat: np.ndarray
    d_m: np.ndarray
    reference: np.ndarray
    rmse: dict[str, float]
    saturation_steps: int
    diverged: bool

    def write_csv(self, path) -> None:
        n_u = self.u_cmd.shape[1]
        header = (
            ["t"]
            + ["px", "py", "pz", "vx", "vy", "vz", "roll", "pitch", "yaw", "wx", "wy", "wz"]
            + [f"u{i + 1}" for i in range(n_u)]
            + [f"u_sat{i + 1}" for i in range(n_u)]
            + ["d_M"]
        )
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i in range(len(self.t)):
                row = [self.t[i], *self.states[i], *self.u_cmd[i], *self.u_sat[i], self.d_m[i]]
                writer.writerow([repr(float(v)) for v in row])


def rk4_step(f, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _reference(scenario: Scenario, t: float) -> np.ndarray:
    """Reference state (position and velocity rows; attitude/rate refs are zero)."""
    ref = np.zeros(12)
    if scenario.kind == "ref_step":
        ref[POS] = scenario.step_offset
    elif scenario.kind == "trajectory_circle":
        r = scenario.circle.diameter / 2.0
        w = scenario.circle.speed / r
        ref[0] = r * np.cos(w * t)
        ref[1] = r * np.sin(w * t)
        ref[2] = scenario.circle.height
        ref[3] = -r * w * np.sin(w * t)
        ref[4] = r * w * np.cos(w * t)
    return ref


def _mass_event_wrench(event: MassEvent, com_offset: np.ndarray) -> np.ndarray:
    """Constant wrench of the hanging mass: weight plus its torque about the CoM."""
    f = event.mass * GRAVITY
    ax, ay = np.asarray(event.attach_point, dtype=float) - com_offset
    return np.array([0.0, 0.0, -f, -ay * f, ax * f, 0.0])


def simulate(model: LinearModel, controller: ControlSolution, scenario: Scenario) -> SimReport:
    """Integrate the nonlinear closed loop through one scenario.

    Divergence (position beyond 50 m or pitch at the kinematic limit) sets the
    report flag and truncates the recorded series instead of raising.
    """
    n_steps = scenario.n_steps
    hold = scenario.steps_per_control
    dt = scenario.dt
    ctrl_dt = hold * dt
    n_u = model.n_inputs
    rng = np.random.default_rng(scenario.seed)
    sigma = np.asarray(scenario.noise_intensity, dtype=float)
    noisy = bool(np.any(sigma > 0.0))

    margin = MarginEvaluator(controller.sigma_u, model.thrust_min, model.thrust_max)

    plant: Plant = model.plant
    mp = model.mass_props
    event = scenario.mass_event if scenario.kind == "added_mass" else None
    event_applied = False

    base_d = np.zeros(6)
    if scenario.kind == "wind":
        base_d[:3] = scenario.wind_force

    x = np.zeros(12)
    if scenario.kind == "trajectory_circle":
        # Start hovering on the track; the step kinds start at the pre-step hover.
        x[POS] = _reference(scenario, 0.0)[POS]

    t_out = np.empty(n_steps)
    states = np.empty((n_steps, 12))
    u_cmd_out = np.empty((n_steps, n_u))
    u_sat_out = np.empty((n_steps, n_u))
    d_m_out = np.empty(n_steps)
    refs = np.empty((n_steps, 12))

    diverged = False
    saturation_steps = 0
    recorded = 0

    for start in range(0, n_steps, hold):
        t = start * dt
        if np.any(np.abs(x[POS]) > POSITION_LIMIT) or abs(x[7]) >= PITCH_LIMIT:
            diverged = True
            break

        if event is not None and not event_applied and t >= event.time - 0.5 * dt:
            event_applied = True
            if event.mode == "wrench":
                base_d = base_d + _mass_event_wrench(event, mp.com_offset)
            else:
                mp2 = with_point_mass(mp, event.mass, np.asarray(event.attach_point))
                shift = mp.com_offset - mp2.com_offset
                plant = Plant(
                    mass=mp2.total_mass,
                    inertia=mp2.inertia,
                    inertia_inv=np.linalg.inv(mp2.inertia),
                    rotor_xy=plant.rotor_xy + shift,
                    spin_signs=plant.spin_signs,
                    kappa=plant.kappa,
                )

        ref = _reference(scenario, t)
        u_cmd = model.u_bar - controller.k_gain @ (x - ref)
        u_sat = np.clip(u_cmd, model.thrust_min, model.thrust_max)
        if np.any(np.abs(u_sat - u_cmd) > 1e-12):
            saturation_steps += 1
        d_now = margin.min_distance(u_sat)

        d = base_d.copy()
        if noisy:
            d += sigma * rng.standard_normal(6) / np.sqrt(ctrl_dt)

        deriv = lambda s: nonlinear_derivative(s, u_sat, d, plant)  # noqa: E731
        try:
            for sub in range(hold):
                i = start + sub
                t_out[i] = i * dt
                states[i] = x
                u_cmd_out[i] = u_cmd
                u_sat_out[i] = u_sat
                d_m_out[i] = d_now
                refs[i] = _reference(scenario, i * dt)
                recorded = i + 1
                x = rk4_step(deriv, x, dt)
        except GimbalLock:
            diverged = True
            break

    n = recorded
    err = states[:n] - refs[:n]
    rmse = {
        m: float(np.sqrt(np.mean(err[:, _METRIC_INDEX[m]] ** 2))) if n else float("nan")
        for m in METRICS
    }
    return SimReport(
        scenario=scenario,
        t=t_out[:n],
        states=states[:n],
        u_cmd=u_cmd_out[:n],
        u_sat=u_sat_out[:n],
        d_m=d_m_out[:n],
        reference=refs[:n],
        rmse=rmse,
        saturation_steps=saturation_steps,
        diverged=diverged,
    )


def step_metrics(report: SimReport, axis: int = 0) -> tuple[float, float]:
    """(peak overshoot, 5% settling time) of a reference-step response."""
    target = report.reference[-1, axis]
    signal = report.states[:, axis]
    sign = 1.0 if target >= 0.0 else -1.0
    overshoot = max(0.0, float(np.max(sign * signal) - abs(target)))
    band = 0.05 * abs(target)
    outside = np.abs(signal - target) > band
    settle = float(report.t[-1]) if outside[-1] else 0.0
    idx = np.nonzero(outside)[0]
    if idx.size and not outside[-1]:
        settle = float(report.t[idx[-1] + 1])
    return overshoot, settle


@dataclass(frozen=True)
class ComparisonRow:
    scenario: str
    metric: str
    optimal: float
    suboptimal: float
    improvement_pct: float


@dataclass
class ComparisonTable:
    rows: list[ComparisonRow]
    reports: dict[tuple[str, str], SimReport]


def compare_layouts(
    optimal: tuple[LinearModel, ControlSolution],
    suboptimal: tuple[LinearModel, ControlSolution],
    scenarios: list[Scenario],
    labels: tuple[str, str] = ("optimal", "suboptimal"),
) -> ComparisonTable:
    """Run matched-seed scenario suites on two layouts and tabulate RMSE pairs.

    Improvement is 100 * (suboptimal - optimal) / suboptimal per metric
    (positive means the first layout tracked better).
    """
    rows: list[ComparisonRow] = []
    reports: dict[tuple[str, str], SimReport] = {}
    for scenario in scenarios:
        rep_a = simulate(*optimal, scenario)
        rep_b = simulate(*suboptimal, scenario)
        reports[(labels[0], scenario.name)] = rep_a
        reports[(labels[1], scenario.name)] = rep_b
        for metric in METRICS:
            a, b = rep_a.rmse[metric], rep_b.rmse[metric]
            pct = 100.0 * (b - a) / b if b > 0.0 else 0.0
            rows.append(ComparisonRow(scenario.name, metric, a, b, pct))
    return ComparisonTable(rows=rows, reports=reports)
