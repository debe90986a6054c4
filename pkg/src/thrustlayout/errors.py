"""Exception types shared across the toolkit."""

from __future__ import annotations


class CodesignError(Exception):
    """Base class for all toolkit errors."""


class NoIntersection(CodesignError):
    """A centroid ray missed the polygon boundary (internal geometry error)."""


class SeparationViolation(CodesignError):
    """Two vehicles are attached closer than the minimum separation."""

    def __init__(self, pair: tuple[int, int], distance: float, minimum: float):
        self.pair = pair
        self.distance = distance
        self.minimum = minimum
        super().__init__(
            f"quads {pair[0]} and {pair[1]} are {distance:.4f} m apart "
            f"(minimum {minimum:.4f} m)"
        )


class GimbalLock(CodesignError):
    """Pitch too close to +/-90 deg for valid roll-pitch-yaw kinematics."""


class RankDeficientWrenchMap(CodesignError):
    """The thrust-to-wrench map has rank < 4; hover torques cannot be balanced."""


class InfeasibleFeedforward(CodesignError):
    """Hover feedforward thrust leaves the per-motor saturation interval."""

    def __init__(self, u_bar, u_min: float, u_max: float):
        self.u_bar = u_bar
        self.u_min = u_min
        self.u_max = u_max
        lo = float(min(u_bar))
        hi = float(max(u_bar))
        super().__init__(
            f"feedforward thrust range [{lo:.3f}, {hi:.3f}] N exits "
            f"[{u_min:.3f}, {u_max:.3f}] N"
        )


class NotStabilizable(CodesignError):
    """The Riccati Hamiltonian has no stable invariant subspace of full dimension."""


class IllConditioned(CodesignError):
    """A matrix-equation residual check failed after refinement."""


class NotHurwitz(CodesignError):
    """A closed-loop matrix has an eigenvalue with nonnegative real part."""


class InfeasibleConstraint(CodesignError):
    """A QP equality constraint lies outside the box."""


class NumericalFailure(CodesignError):
    """A QP failed to certify its KKT residual."""


class NoFeasibleLayout(CodesignError):
    """No feasible placement was found within the probe budget."""


class ConfigError(CodesignError):
    """Invalid run configuration; carries the offending field path."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)
