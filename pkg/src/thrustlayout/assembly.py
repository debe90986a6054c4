"""Placement of thrust modules around the payload and combined mass properties.

Angles are measured in the payload body frame from the +x axis; the attachment
ray leaves the payload centroid, crosses the boundary (outermost crossing for
non-convex sections) and extends outward by the rod length.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import SeparationViolation
from .payload import PayloadSpec
from .vehicle import QuadSpec, default_min_separation

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Layout:
    """Placement angles of the N modules plus the shared rod length."""

    theta: np.ndarray
    rod_length: float = 0.10

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if theta.ndim != 1:
            raise ValueError("theta must be a 1-D angle vector")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        if self.rod_length < 0.0:
            raise ValueError("rod_length must be nonnegative")
        object.__setattr__(self, "theta", np.mod(theta, TWO_PI))

    @property
    def n_quads(self) -> int:
        return len(self.theta)

    def canonical(self) -> "Layout":
        """Sorted-angle representative (cost is permutation invariant)."""
        return Layout(np.sort(self.theta), self.rod_length)


@dataclass(frozen=True)
class MassProperties:
    """Combined payload + modules mass model.

    `inertia` is about the system center of mass with payload body axes;
    `com_offset` locates the CoM relative to the payload centroid;
    `attachment_points` are in the payload-centroid frame.
    """

    total_mass: float
    inertia: np.ndarray
    com_offset: np.ndarray
    attachment_points: np.ndarray


def attachment_point(theta_i: float, payload: PayloadSpec, rod_length: float) -> np.ndarray:
    """Attachment location for one module: boundary crossing plus rod extension."""
    r = payload.boundary_radius(theta_i) + rod_length
    return r * np.array([np.cos(theta_i), np.sin(theta_i)])


def check_separation(points: np.ndarray, minimum: float) -> None:
    """Raise SeparationViolation for the closest offending pair, if any."""
    worst = None
    for i, j in combinations(range(len(points)), 2):
        d = float(np.hypot(*(points[i] - points[j])))
        if d < minimum and (worst is None or d < worst[2]):
            worst = (i, j, d)
    if worst is not None:
        raise SeparationViolation((worst[0], worst[1]), worst[2], minimum)


def _parallel_axis(mass: float, r: np.ndarray) -> np.ndarray:
    """Point-mass inertia term m*(|r|^2 I - r r^T) for a 3-D displacement r."""
    return mass * (float(r @ r) * np.eye(3) - np.outer(r, r))


def compose_mass_properties(
    payload: PayloadSpec,
    quad: QuadSpec,
    layout: Layout,
    min_separation: float | None = None,
) -> MassProperties:
    """Total mass, CoM and inertia of the payload with N attached modules.

    Each module contributes its own inertia plus a point-mass parallel-axis
    term at its attachment point. Pairwise attachment spacing below
    `min_separation` (default: one module footprint) raises SeparationViolation.
    """
    if min_separation is None:
        min_separation = default_min_separation(quad)
    points = np.array(
        [attachment_point(t, payload, layout.rod_length) for t in layout.theta]
    ).reshape(-1, 2)
    check_separation(points, min_separation)

    n = layout.n_quads
    m_q = quad.total_mass
    m_total = payload.mass + n * m_q
    # Accumulate in lexicographic point order so the result is bit-identical
    # under permutations of theta.
    order = np.lexsort((points[:, 1], points[:, 0])) if n else []
    com = np.zeros(2)
    for i in order:
        com += points[i]
    com *= m_q / m_total

    com3 = np.array([com[0], com[1], 0.0])
    inertia = payload.inertia_tensor() + _parallel_axis(payload.mass, -com3)
    for i in order:
        r = np.array([points[i, 0], points[i, 1], 0.0]) - com3
        inertia = inertia + quad.inertia + _parallel_axis(m_q, r)

    return MassProperties(
        total_mass=m_total,
        inertia=inertia,
        com_offset=com,
        attachment_points=points,
    )


def with_point_mass(mp: MassProperties, extra_mass: float, xy: np.ndarray) -> MassProperties:
    """Mass properties after rigidly adding a point mass at `xy` (payload frame).

    Used by the full-dynamics added-mass simulation mode.
    """
    xy = np.asarray(xy, dtype=float)
    m_new = mp.total_mass + extra_mass
    com_new = (mp.total_mass * mp.com_offset + extra_mass * xy) / m_new
    shift = np.array([*(mp.com_offset - com_new), 0.0])
    r_pt = np.array([*(xy - com_new), 0.0])
    inertia = mp.inertia + _parallel_axis(mp.total_mass, shift) + _parallel_axis(extra_mass, r_pt)
    return MassProperties(
        total_mass=m_new,
        inertia=inertia,
        com_offset=com_new,
        attachment_points=mp.attachment_points,
    )
