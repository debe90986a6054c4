import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import random_feasible_theta
from oracles import finite_difference_jacobians
from thrustlayout.assembly import Layout, compose_mass_properties
from thrustlayout.dynamics import (
    DisturbanceWrench,
    GRAVITY,
    Plant,
    StateVector,
    build_plant,
    euler_rate_matrix,
    feedforward_hover,
    linearize_at_hover,
    min_norm_feedforward,
    nonlinear_derivative,
    rotation_matrix,
    wrench_map,
)
from thrustlayout.errors import GimbalLock, InfeasibleFeedforward, RankDeficientWrenchMap
from thrustlayout.payload import regular_polygon, square_panel
from thrustlayout.vehicle import QuadSpec

SQUARE = square_panel(side=0.45, mass=1.02)
QUAD = QuadSpec()
CORNERS = Layout(np.deg2rad([45, 135, 225, 315]))


@pytest.fixture(scope="module")
def corner_model():
    mp = compose_mass_properties(SQUARE, QUAD, CORNERS)
    return linearize_at_hover(mp, QUAD)


class TestKinematics:
    def test_rotation_identity_at_hover(self):
        assert_allclose(rotation_matrix(np.zeros(3)), np.eye(3), atol=1e-15)

    def test_rotation_yaw_only(self):
        rot = rotation_matrix(np.array([0.0, 0.0, np.pi / 2]))
        assert_allclose(rot @ np.array([1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-15)

    def test_euler_rates_identity_at_hover(self):
        assert_allclose(euler_rate_matrix(np.zeros(3)), np.eye(3), atol=1e-15)

    def test_gimbal_lock(self):
        with pytest.raises(GimbalLock):
            euler_rate_matrix(np.array([0.0, np.pi / 2, 0.0]))

    def test_state_vector_round_trip(self):
        x = np.arange(12.0)
        assert_allclose(StateVector.from_array(x).as_array(), x)
        assert_allclose(DisturbanceWrench.zero().as_array(), np.zeros(6))


class TestNonlinearDerivative:
    def test_hover_equilibrium(self, corner_model):
        dx = nonlinear_derivative(
            np.zeros(12), corner_model.u_bar, np.zeros(6), corner_model.plant
        )
        assert np.max(np.abs(dx)) <= 1e-9

    def test_free_fall_any_attitude(self, corner_model):
        x = np.zeros(12)
        x[6:9] = [0.4, -0.7, 1.3]
        dx = nonlinear_derivative(x, np.zeros(16), np.zeros(6), corner_model.plant)
        assert_allclose(dx[3:6], [0.0, 0.0, -GRAVITY], atol=1e-12)

    def test_uniform_extra_thrust_pure_heave(self, corner_model):
        # Independent torque sum: equal thrust increments on a symmetric layout
        # cancel lever arms and spin torques exactly.
        plant = corner_model.plant
        delta = 0.37
        u = corner_model.u_bar + delta
        dx = nonlinear_derivative(np.zeros(12), u, np.zeros(6), plant)
        assert dx[5] == pytest.approx(16 * delta / plant.mass, rel=1e-12)
        # Torque sum assembled independently from rotor geometry.
        roll = plant.rotor_xy[:, 1] @ u
        pitch = -plant.rotor_xy[:, 0] @ u
        yaw = (plant.spin_signs * plant.kappa) @ u
        assert max(abs(roll), abs(pitch), abs(yaw)) < 1e-12
        assert np.max(np.abs(dx[9:12])) < 1e-12

    def test_disturbance_force_is_world_frame(self, corner_model):
        x = np.zeros(12)
        x[6] = 0.5
        d = np.array([1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
        dx = nonlinear_derivative(x, np.zeros(16), d, corner_model.plant)
        assert dx[3] == pytest.approx(1.0 / corner_model.plant.mass, rel=1e-12)
        assert dx[4] == pytest.approx(0.0, abs=1e-15)


class TestFeedforward:
    def test_symmetric_corners_share_weight(self, corner_model):
        expected = 4.868 * GRAVITY / 16.0
        assert_allclose(corner_model.u_bar, expected, rtol=1e-12)
        assert expected == pytest.approx(2.985, abs=1e-3)

    def test_single_module_centered(self):
        # Rotor X centered on the CoM: each motor carries a quarter of the weight.
        from thrustlayout.assembly import MassProperties

        m = QUAD.total_mass
        mp = MassProperties(
            total_mass=m,
            inertia=QUAD.inertia,
            com_offset=np.zeros(2),
            attachment_points=np.zeros((1, 2)),
        )
        u = feedforward_hover(mp, QUAD)
        assert_allclose(u, m * GRAVITY / 4.0, rtol=1e-12)

    def test_asymmetric_three_quads_min_norm(self):
        payload = square_panel(side=0.45, mass=0.8)
        layout = Layout(np.deg2rad([10.0, 130.0, 250.0]))
        mp = compose_mass_properties(payload, QUAD, layout)
        u_bar = feedforward_hover(mp, QUAD)
        w = wrench_map(build_plant(mp, QUAD))
        target = np.array([mp.total_mass * GRAVITY, 0.0, 0.0, 0.0])
        assert np.max(np.abs(w @ u_bar - target)) <= 1e-10
        # Minimum norm among feasible solutions: null-space perturbations only
        # increase the norm.
        rng = np.random.default_rng(0)
        _, _, vt = np.linalg.svd(w)
        null = vt[4:].T
        for _ in range(20):
            z = rng.standard_normal(null.shape[1])
            candidate = u_bar + null @ (0.2 * z)
            if np.all(candidate >= QUAD.thrust_min) and np.all(candidate <= QUAD.thrust_max):
                assert np.linalg.norm(candidate) >= np.linalg.norm(u_bar) - 1e-12

    def test_infeasible_when_ceiling_too_low(self):
        weak = QuadSpec(thrust_max=1.0)
        mp = compose_mass_properties(SQUARE, weak, CORNERS)
        with pytest.raises(InfeasibleFeedforward):
            feedforward_hover(mp, weak)

    def test_rank_deficient_map(self):
        # kappa = 0 kills the yaw row for a single centered module.
        w = np.array([[1.0, 1.0, 1.0, 1.0], [0.1, 0.1, -0.1, -0.1],
                      [-0.1, 0.1, 0.1, -0.1], [0.0, 0.0, 0.0, 0.0]])
        with pytest.raises(RankDeficientWrenchMap):
            min_norm_feedforward(w, np.array([10.0, 0, 0, 0]), 0.0, 6.0)


class TestLinearization:
    def test_tilt_gravity_entries(self, corner_model):
        assert corner_model.a[3, 7] == GRAVITY
        assert corner_model.a[4, 6] == -GRAVITY
        assert_allclose(corner_model.a[0:3, 3:6], np.eye(3))
        assert_allclose(corner_model.a[6:9, 9:12], np.eye(3))

    def test_vertical_thrust_column(self, corner_model):
        assert_allclose(corner_model.b[5, :], 1.0 / 4.868, rtol=1e-12)
        assert_allclose(corner_model.b[0:3, :], 0.0)
        assert_allclose(corner_model.b[6:9, :], 0.0)

    def test_a_identical_across_layouts(self, corner_model):
        mp = compose_mass_properties(SQUARE, QUAD, Layout(np.deg2rad([0, 90, 180, 270])))
        other = linearize_at_hover(mp, QUAD)
        assert np.array_equal(other.a, corner_model.a)

    def test_b_columns_zero_in_position_rows(self, corner_model):
        assert_allclose(corner_model.b[np.r_[0:3, 6:9], :], 0.0)

    @pytest.mark.parametrize("seed", range(4))
    def test_jacobians_match_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 5))
        radius = rng.uniform(0.12, 0.3)
        k = int(rng.integers(5, 10))
        angles = np.sort(rng.uniform(0, 2 * np.pi, k))
        radii = radius * rng.uniform(0.7, 1.3, k)
        verts = np.stack([radii * np.cos(angles), radii * np.sin(angles)], axis=1)
        from thrustlayout.payload import PayloadSpec
        from thrustlayout.optimizer import CodesignProblem

        payload = PayloadSpec(verts, mass=rng.uniform(0.3, 1.5))
        problem = CodesignProblem(payload, QUAD, n, min_separation=0.0)
        theta = random_feasible_theta(problem, rng)
        mp = compose_mass_properties(payload, QUAD, Layout(theta), min_separation=0.0)
        model = linearize_at_hover(mp, QUAD)

        f = lambda x, u, d: nonlinear_derivative(x, u, d, model.plant)  # noqa: E731
        a_fd, b_fd, bd_fd = finite_difference_jacobians(
            f, np.zeros(12), model.u_bar, np.zeros(6)
        )
        assert np.max(np.abs(a_fd - model.a)) <= 1e-6
        assert np.max(np.abs(b_fd - model.b)) <= 1e-6
        assert np.max(np.abs(bd_fd - model.bd)) <= 1e-6

    def test_b_smooth_within_edge(self):
        # Finite-difference theta sensitivity stays bounded while the ray sweeps
        # one edge of the square (no vertex crossing between 10 and 30 deg).
        def b_at(theta_deg):
            layout = Layout(np.deg2rad([theta_deg, 135.0, 225.0, 315.0]))
            mp = compose_mass_properties(SQUARE, QUAD, layout, min_separation=0.0)
            return linearize_at_hover(mp, QUAD).b

        h = 0.5
        grads = [
            np.max(np.abs(b_at(t + h) - b_at(t - h))) / np.deg2rad(2 * h)
            for t in (12.0, 18.0, 24.0, 30.0)
        ]
        assert max(grads) < 50.0 * min(grads)

    def test_infeasible_feedforward_propagates(self):
        weak = QuadSpec(thrust_max=2.0)
        mp = compose_mass_properties(SQUARE, weak, CORNERS)
        with pytest.raises(InfeasibleFeedforward):
            linearize_at_hover(mp, weak)


class TestEquilibriumProperty:
    @pytest.mark.parametrize("theta_deg", [[45, 135, 225, 315], [0, 90, 180, 270], [40, 130, 220, 310]])
    def test_equilibrium_residual(self, theta_deg):
        mp = compose_mass_properties(SQUARE, QUAD, Layout(np.deg2rad(theta_deg)))
        model = linearize_at_hover(mp, QUAD)
        dx = nonlinear_derivative(np.zeros(12), model.u_bar, np.zeros(6), model.plant)
        assert np.max(np.abs(dx)) <= 1e-9
