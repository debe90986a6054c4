"""Payload geometry: polygonal right-prism cross sections and their mass properties.

The payload is a right prism; all placement geometry happens on the mid-plane
cross section, a simple polygon stored counter-clockwise and re-centered so the
area centroid sits at the origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NoIntersection

_CENTROID_TOL = 1e-12


def polygon_area_centroid(vertices: np.ndarray) -> tuple[float, np.ndarray]:
    """Signed area and area centroid of a polygon (shoelace).

    Positive area means counter-clockwise orientation.
    """
    x, y = vertices[:, 0], vertices[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * float(np.sum(cross))
    if abs(area) < 1e-12:
        raise ValueError("polygon has (near) zero area")
    cx = float(np.sum((x + xn) * cross)) / (6.0 * area)
    cy = float(np.sum((y + yn) * cross)) / (6.0 * area)
    return area, np.array([cx, cy])


def polygon_second_moments(vertices: np.ndarray) -> tuple[float, float, float]:
    """Second moments of area (Ix, Iy, Ixy) about the origin, CCW polygon.

    Ix = integral of y^2 dA, Iy = integral of x^2 dA, Ixy = integral of x*y dA.
    """
    x, y = vertices[:, 0], vertices[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    ix = float(np.sum(cross * (y * y + y * yn + yn * yn))) / 12.0
    iy = float(np.sum(cross * (x * x + x * xn + xn * xn))) / 12.0
    ixy = float(np.sum(cross * (x * yn + 2.0 * x * y + 2.0 * xn * yn + xn * y))) / 24.0
    return ix, iy, ixy


def _segments_intersect(p1, p2, q1, q2) -> bool:
    """Proper-interior intersection test between open segments."""
    d1 = p2 - p1
    d2 = q2 - q1
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(den) < 1e-15:
        return False
    t = ((q1[0] - p1[0]) * d2[1] - (q1[1] - p1[1]) * d2[0]) / den
    s = ((q1[0] - p1[0]) * d1[1] - (q1[1] - p1[1]) * d1[0]) / den
    eps = 1e-12
    return eps < t < 1.0 - eps and eps < s < 1.0 - eps


def is_simple_polygon(vertices: np.ndarray) -> bool:
    """True when no two non-adjacent edges intersect. O(n^2), fine for small n."""
    n = len(vertices)
    edges = [(vertices[i], vertices[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            if _segments_intersect(*edges[i], *edges[j]):
                return False
    return True


def point_in_polygon(point: np.ndarray, vertices: np.ndarray) -> bool:
    """Even-odd crossing test; boundary points count as inside."""
    x, y = float(point[0]), float(point[1])
    inside = False
    n = len(vertices)
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        if min(y1, y2) - 1e-15 <= y <= max(y1, y2) + 1e-15:
            if abs(y2 - y1) < 1e-15:
                if min(x1, x2) - 1e-12 <= x <= max(x1, x2) + 1e-12:
                    return True
                continue
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if abs(xc - x) < 1e-12:
                return True
            if (y1 > y) != (y2 > y) and x < xc:
                inside = not inside
    return inside


def ray_boundary_crossings(vertices: np.ndarray, angle: float) -> np.ndarray:
    """Distances from the origin to every boundary crossing of the ray at `angle`.

    The origin must lie inside the polygon (vertices are centroid-centered).
    Crossings are returned sorted ascending; a ray through a vertex reports the
    shared crossing once per incident edge (same distance, harmless).
    """
    d = np.array([np.cos(angle), np.sin(angle)])
    p1 = vertices
    p2 = np.roll(vertices, -1, axis=0)
    e = p2 - p1
    den = d[0] * e[:, 1] - d[1] * e[:, 0]
    ok = np.abs(den) > 1e-14
    t = np.where(ok, (p1[:, 0] * e[:, 1] - p1[:, 1] * e[:, 0]) / np.where(ok, den, 1.0), -1.0)
    s = np.where(ok, (p1[:, 0] * d[1] - p1[:, 1] * d[0]) / np.where(ok, den, 1.0), -1.0)
    hits = t[(t > 1e-12) & (s >= -1e-12) & (s <= 1.0 + 1e-12) & ok]
    return np.sort(hits)


@dataclass(frozen=True)
class PayloadSpec:
    """Polygonal right-prism payload.

    `vertices` may be given in either orientation and any position; they are
    normalized to counter-clockwise order and re-centered on the area centroid.
    `inertia_zz_override` replaces the uniform-density yaw inertia when given.
    """

    vertices: np.ndarray
    mass: float
    thickness: float = 0.005
    inertia_zz_override: float | None = None
    name: str = "payload"
    _area: float = field(init=False, repr=False, default=0.0)

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 3:
            raise ValueError("vertices must be an (n>=3, 2) array")
        area, centroid = polygon_area_centroid(verts)
        if area < 0.0:
            verts = verts[::-1].copy()
            area = -area
        verts = verts - centroid
        # Recentring is exact up to roundoff; enforce the stored invariant.
        _, c2 = polygon_area_centroid(verts)
        if np.max(np.abs(c2)) > _CENTROID_TOL:
            verts = verts - c2
        if not is_simple_polygon(verts):
            raise ValueError("polygon is self-intersecting")
        if not point_in_polygon(np.zeros(2), verts):
            raise ValueError(
                "area centroid lies outside the material; attachment rays are undefined"
            )
        if self.mass <= 0.0:
            raise ValueError("mass must be positive")
        if self.thickness <= 0.0:
            raise ValueError("thickness must be positive")
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "_area", area)

    @property
    def area(self) -> float:
        return self._area

    def inertia_tensor(self) -> np.ndarray:
        """3x3 inertia of the uniform prism about its centroid, body axes.

        In-plane terms include the prism-thickness contribution t^2/12; the
        yaw term honors `inertia_zz_override`.
        """
        ix, iy, ixy = polygon_second_moments(self.vertices)
        sigma = self.mass / self._area
        t2 = self.thickness * self.thickness / 12.0
        jxx = sigma * ix + self.mass * t2
        jyy = sigma * iy + self.mass * t2
        jzz = sigma * (ix + iy)
        if self.inertia_zz_override is not None:
            jzz = float(self.inertia_zz_override)
        jxy = -sigma * ixy
        return np.array([[jxx, jxy, 0.0], [jxy, jyy, 0.0], [0.0, 0.0, jzz]])

    def boundary_radius(self, angle: float) -> float:
        """Distance from the centroid to the outermost boundary crossing at `angle`.

        Non-convex sections can be crossed several times; the outermost crossing
        keeps attachments outside the material.
        """
        hits = ray_boundary_crossings(self.vertices, float(angle))
        if hits.size == 0:
            raise NoIntersection(f"ray at {angle:.4f} rad missed the boundary")
        return float(hits[-1])


def square_panel(side: float = 0.45, mass: float = 1.02, **kw) -> PayloadSpec:
    h = side / 2.0
    verts = [(-h, -h), (h, -h), (h, h), (-h, h)]
    return PayloadSpec(np.array(verts), mass=mass, name=kw.pop("name", "square"), **kw)


def concave_square_panel(
    side: float = 0.45,
    notch_width: float = 0.15,
    notch_depth: float = 0.15,
    mass: float = 0.71,
    **kw,
) -> PayloadSpec:
    """Square panel with a rectangular notch cut into the +x edge (concave)."""
    h = side / 2.0
    w = notch_width / 2.0
    b = h - notch_depth
    verts = [(-h, -h), (h, -h), (h, -w), (b, -w), (b, w), (h, w), (h, h), (-h, h)]
    return PayloadSpec(np.array(verts), mass=mass, name=kw.pop("name", "concave_square"), **kw)


def l_panel(side: float = 0.45, mass: float = 0.76, **kw) -> PayloadSpec:
    """Square panel with the +x/+y quadrant removed."""
    h = side / 2.0
    verts = [(-h, -h), (h, -h), (h, 0.0), (0.0, 0.0), (0.0, h), (-h, h)]
    return PayloadSpec(np.array(verts), mass=mass, name=kw.pop("name", "L_panel"), **kw)


def regular_polygon(radius: float, n: int, mass: float, **kw) -> PayloadSpec:
    ang = 2.0 * np.pi * np.arange(n) / n
    verts = radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return PayloadSpec(verts, mass=mass, name=kw.pop("name", f"{n}-gon"), **kw)


#: Shape constructors usable by name from run configs.
NAMED_SHAPES = {
    "square": square_panel,
    "concave_square": concave_square_panel,
    "L_panel": l_panel,
}


def payload_from_shape(name: str, mass: float, **kw) -> PayloadSpec:
    if name not in NAMED_SHAPES:
        raise ValueError(f"unknown shape {name!r}; choose from {sorted(NAMED_SHAPES)}")
    return NAMED_SHAPES[name](mass=mass, **kw)
