import numpy as np
import pytest

from thrustlayout.optimizer import CodesignProblem
from thrustlayout.payload import payload_from_shape
from thrustlayout.vehicle import QuadSpec

CORNERS_DEG = [45.0, 135.0, 225.0, 315.0]
EDGE_MIDS_DEG = [0.0, 90.0, 180.0, 270.0]
PANEL_B_SYMMETRIC_DEG = [0.0, 120.0, 240.0]


@pytest.fixture(scope="session")
def quad():
    return QuadSpec()


@pytest.fixture(scope="session")
def panel_a_problem(quad):
    return CodesignProblem(payload_from_shape("square", mass=1.02), quad, 4)


@pytest.fixture(scope="session")
def panel_a_corners(panel_a_problem):
    """(model, controller, score) for the corner arrangement of the square panel."""
    return panel_a_problem.solve(np.deg2rad(CORNERS_DEG))


@pytest.fixture(scope="session")
def panel_b_problem(quad):
    return CodesignProblem(
        payload_from_shape("concave_square", mass=0.71, notch_depth=0.2, notch_width=0.2),
        quad,
        3,
    )


def random_feasible_theta(problem, rng, max_tries=500):
    from thrustlayout.optimizer import evaluate_candidate

    for _ in range(max_tries):
        theta = rng.uniform(0.0, 2.0 * np.pi, size=problem.n_quads)
        if np.isfinite(evaluate_candidate(theta, problem)):
            return theta
    raise RuntimeError("could not sample a feasible layout")
