"""Quadcopter thrust-module description."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class QuadSpec:
    """One quadcopter module: mass, geometry and per-motor thrust limits.

    Defaults correspond to the 330 mm reference vehicle (525 g frame, 437 g
    battery, 114.5 mm props). The module is modeled with its body axes parallel
    to the payload frame: the four rotors form an X at radius motor_to_motor/2,
    at 45/135/225/315 deg from body x. Diagonal rotor pairs share spin
    direction, so the yaw-torque signs are (+, -, +, -) in that rotor order.
    """

    frame_mass: float = 0.525
    battery_mass: float = 0.437
    motor_to_motor: float = 0.330
    prop_diameter: float = 0.1145
    thrust_min: float = 0.0
    thrust_max: float = 6.0
    kappa: float = 0.012
    local_inertia: np.ndarray | None = None
    rotor_spin_pattern: tuple[int, int, int, int] = (1, -1, 1, -1)
    _inertia: np.ndarray = field(init=False, repr=False, default=None)

    def __post_init__(self):
        if not (0.0 <= self.thrust_min < self.thrust_max):
            raise ValueError("need 0 <= thrust_min < thrust_max")
        if self.total_mass <= 0.0:
            raise ValueError("module mass must be positive")
        if self.motor_to_motor <= 0.0 or self.prop_diameter <= 0.0:
            raise ValueError("geometry lengths must be positive")
        signs = tuple(int(s) for s in self.rotor_spin_pattern)
        if len(signs) != 4 or set(signs) != {1, -1} or sum(signs) != 0:
            raise ValueError("rotor_spin_pattern needs exactly two +1 and two -1")
        object.__setattr__(self, "rotor_spin_pattern", signs)
        if self.local_inertia is None:
            # Flat-disk stand-in: the module's own inertia about its center.
            r = self.rotor_radius
            m = self.total_mass
            inertia = np.diag([0.25 * m * r * r, 0.25 * m * r * r, 0.5 * m * r * r])
        else:
            inertia = np.asarray(self.local_inertia, dtype=float)
            if inertia.shape != (3, 3):
                raise ValueError("local_inertia must be 3x3")
        object.__setattr__(self, "_inertia", inertia)

    @property
    def total_mass(self) -> float:
        return self.frame_mass + self.battery_mass

    @property
    def rotor_radius(self) -> float:
        return self.motor_to_motor / 2.0

    @property
    def inertia(self) -> np.ndarray:
        """3x3 inertia of the module about its own center, body axes."""
        return self._inertia

    def rotor_offsets(self) -> np.ndarray:
        """(4, 2) rotor positions relative to the module center."""
        r = self.rotor_radius
        ang = np.deg2rad([45.0, 135.0, 225.0, 315.0])
        return r * np.stack([np.cos(ang), np.sin(ang)], axis=1)

    def spin_signs(self) -> np.ndarray:
        return np.array(self.rotor_spin_pattern, dtype=float)


def default_min_separation(quad: QuadSpec) -> float:
    """Attachment-point spacing below which two modules physically overlap."""
    return quad.motor_to_motor + quad.prop_diameter
