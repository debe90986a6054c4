import numpy as np
import pytest
from numpy.testing import assert_allclose

from oracles import boundary_radius_by_bisection, triangle_fan_moments
from thrustlayout.assembly import attachment_point
from thrustlayout.errors import NoIntersection
from thrustlayout.payload import (
    PayloadSpec,
    concave_square_panel,
    l_panel,
    payload_from_shape,
    polygon_area_centroid,
    ray_boundary_crossings,
    regular_polygon,
    square_panel,
)

SQUARE = square_panel(side=0.45, mass=1.02)


class TestAttachmentPoint:
    def test_square_corner_ray(self):
        # 45 deg ray passes through the corner of the 0.45 m square.
        assert_allclose(attachment_point(np.pi / 4, SQUARE, 0.0), [0.225, 0.225], atol=1e-12)

    def test_square_edge_midpoint(self):
        assert_allclose(attachment_point(0.0, SQUARE, 0.0), [0.225, 0.0], atol=1e-12)

    def test_rod_extends_outward(self):
        assert_allclose(attachment_point(0.0, SQUARE, 0.1), [0.325, 0.0], atol=1e-12)

    def test_concave_outermost_crossing(self):
        # A horizontal slot cut from the +x edge: rays through the slot's side
        # wall cross the boundary three times and must exit on the outer edge,
        # not stop at the first wall crossing.
        c_shape = PayloadSpec(
            np.array(
                [
                    (-0.225, -0.225), (0.225, -0.225), (0.225, -0.05), (0.0, -0.05),
                    (0.0, 0.05), (0.225, 0.05), (0.225, 0.225), (-0.225, 0.225),
                ]
            ),
            mass=1.0,
        )
        for angle_deg in (-35.0, -25.0, 20.0, 30.0, 160.0, 220.0):
            angle = np.deg2rad(angle_deg)
            expected = boundary_radius_by_bisection(c_shape.vertices, angle)
            assert c_shape.boundary_radius(angle) == pytest.approx(expected, abs=1e-9)
        # Multi-crossing case explicitly: the -25 deg ray ends on the outer
        # right edge, beyond the slot walls.
        hits = ray_boundary_crossings(c_shape.vertices, np.deg2rad(-25.0))
        assert len(hits) >= 3

    def test_concave_square_against_oracle(self):
        shape = concave_square_panel()
        for angle in np.linspace(0.0, 2.0 * np.pi, 37):
            expected = boundary_radius_by_bisection(shape.vertices, angle)
            assert shape.boundary_radius(angle) == pytest.approx(expected, abs=1e-9)

    def test_missed_boundary_reported(self):
        with pytest.raises(NoIntersection):
            # Bypass construction checks: rays from inside the notch void.
            broken = square_panel()
            object.__setattr__(broken, "vertices", broken.vertices + 10.0)
            broken.boundary_radius(0.0)


class TestPayloadSpec:
    def test_vertices_recentered_and_ccw(self):
        shifted = PayloadSpec(np.array([(1.0, 1.0), (2.0, 1.0), (2.0, 2.0), (1.0, 2.0)]), mass=1.0)
        _, centroid = polygon_area_centroid(shifted.vertices)
        assert np.max(np.abs(centroid)) <= 1e-12
        area, _ = polygon_area_centroid(shifted.vertices)
        assert area > 0.0

    def test_clockwise_input_normalized(self):
        cw = PayloadSpec(np.array([(-1.0, -1.0), (-1.0, 1.0), (1.0, 1.0), (1.0, -1.0)]), mass=1.0)
        assert cw.area == pytest.approx(4.0)

    def test_self_intersecting_rejected(self):
        crossed = np.array([(0.0, 0.0), (4.0, 0.0), (4.0, 2.0), (2.0, -1.0), (0.0, 2.0)])
        with pytest.raises(ValueError, match="self-intersecting"):
            PayloadSpec(crossed, mass=1.0)

    def test_zero_area_rejected(self):
        bowtie = np.array([(-1.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0)])
        with pytest.raises(ValueError, match="area"):
            PayloadSpec(bowtie, mass=1.0)

    def test_centroid_outside_material_rejected(self):
        # Notch so deep the area centroid falls in the void.
        with pytest.raises(ValueError, match="centroid"):
            concave_square_panel(notch_depth=0.26, notch_width=0.15)

    @pytest.mark.parametrize("bad", [{"mass": -1.0}, {"mass": 0.0}, {"thickness": -0.1}])
    def test_positive_mass_thickness(self, bad):
        kw = {"mass": 1.0, "thickness": 0.005, **bad}
        with pytest.raises(ValueError):
            PayloadSpec(np.array([(-1, -1), (1, -1), (1, 1), (-1, 1)]), **kw)


class TestInertia:
    def test_rectangle_closed_form(self):
        a, b, m, t = 0.6, 0.3, 2.5, 0.01
        verts = np.array([(-a / 2, -b / 2), (a / 2, -b / 2), (a / 2, b / 2), (-a / 2, b / 2)])
        inertia = PayloadSpec(verts, mass=m, thickness=t).inertia_tensor()
        assert inertia[0, 0] == pytest.approx(m * (b**2 + t**2) / 12.0, rel=1e-10)
        assert inertia[1, 1] == pytest.approx(m * (a**2 + t**2) / 12.0, rel=1e-10)
        assert inertia[2, 2] == pytest.approx(m * (a**2 + b**2) / 12.0, rel=1e-10)
        assert inertia[0, 1] == pytest.approx(0.0, abs=1e-12)

    def test_polygon_against_triangle_fan(self):
        shape = l_panel(mass=0.76, thickness=0.004)
        ix, iy = triangle_fan_moments(shape.vertices)
        sigma = shape.mass / shape.area
        t2 = shape.mass * shape.thickness**2 / 12.0
        inertia = shape.inertia_tensor()
        assert inertia[0, 0] == pytest.approx(sigma * ix + t2, rel=1e-10)
        assert inertia[1, 1] == pytest.approx(sigma * iy + t2, rel=1e-10)
        assert inertia[2, 2] == pytest.approx(sigma * (ix + iy), rel=1e-10)

    def test_polygon_circle_limit(self):
        disk = regular_polygon(0.2, 512, mass=1.7)
        assert disk.inertia_tensor()[2, 2] == pytest.approx(1.7 * 0.2**2 / 2.0, rel=1e-3)

    def test_zz_override(self):
        shape = square_panel(mass=1.02, inertia_zz_override=0.123)
        assert shape.inertia_tensor()[2, 2] == 0.123


class TestNamedShapes:
    @pytest.mark.parametrize("name,mass", [("square", 1.02), ("concave_square", 0.71), ("L_panel", 0.76)])
    def test_registry(self, name, mass):
        shape = payload_from_shape(name, mass=mass)
        assert shape.mass == mass
        assert shape.area > 0.0

    def test_unknown_shape(self):
        with pytest.raises(ValueError, match="unknown shape"):
            payload_from_shape("triangle", mass=1.0)

    def test_concave_square_is_concave(self):
        shape = concave_square_panel()
        # The notch back wall lies strictly inside the bounding box.
        assert shape.boundary_radius(0.0) < shape.boundary_radius(np.pi)
