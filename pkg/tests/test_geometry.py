import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, optimize

from gibbslab.geometry import (
    ORIGIN,
    Arc,
    BoundaryPoint,
    DiskPoint,
    GeometryError,
    Isometry,
    UnitTangent,
    angle_at,
    apply,
    boundary_projection,
    busemann,
    dist,
    dx_distance,
    flow,
    geodesic_point,
    hyperboloid,
    ray_far_point,
    shadow_angle,
    towards_far_point,
)

radii = st.floats(0.0, 0.95)
angles = st.floats(0.0, 2 * math.pi, exclude_max=True)


def disk_points():
    return st.builds(lambda r, a: DiskPoint.from_complex(r * complex(math.cos(a), math.sin(a))), radii, angles)


def isometries():
    return st.builds(
        lambda l, a, phi: Isometry.translation(l, a) @ Isometry.rotation(phi),
        st.floats(0.0, 3.0), angles, angles,
    )


def bisect_shadow(t: float) -> float:
    """Visual angle at which rays from 0 are exactly 1 apart at time t."""
    xi = BoundaryPoint(0.0)
    p = geodesic_point(ORIGIN, xi, t)
    f = lambda th: dist(p, geodesic_point(ORIGIN, BoundaryPoint(th), t)) - 1.0
    return optimize.brentq(f, 1e-15, math.pi, xtol=1e-15)


def test_point_validation():
    with pytest.raises(GeometryError):
        DiskPoint(1.0, 0.0)
    with pytest.raises(GeometryError):
        DiskPoint(1 - 1e-13, 0.0)
    assert BoundaryPoint(-math.pi / 2).angle == pytest.approx(3 * math.pi / 2)
    assert UnitTangent(ORIGIN, 7.0).direction == pytest.approx(7.0 - 2 * math.pi)


def test_distance_examples():
    assert dist(ORIGIN, ORIGIN) == 0.0
    metric = integrate.quad(lambda r: 2 / (1 - r * r), 0, 0.5)[0]
    assert dist(ORIGIN, DiskPoint(0.5, 0)) == pytest.approx(metric, abs=1e-12)
    assert metric == pytest.approx(math.log(3))
    p, q = DiskPoint(0.2, 0.1), DiskPoint(0.0, -0.3)
    assert dist(p, q) == dist(q, p)


def test_apply_examples():
    p = DiskPoint(0.3, -0.2)
    assert apply(Isometry.identity(), p).z == pytest.approx(p.z)
    q = apply(Isometry.rotation(math.pi / 2), DiskPoint(0.5, 0.0))
    assert q.z == pytest.approx(0.5j, abs=1e-15)


def test_translation_length_on_axis():
    g = Isometry(2.0, 1.0, 1.0, 1.0)
    ell = 2 * math.acosh(1.5)
    assert ell == pytest.approx(1.924847, abs=1e-6)

    def displacement(v):
        r = 0.9 * math.tanh(math.hypot(*v))
        p = DiskPoint.from_complex(r * complex(math.cos(math.atan2(v[1], v[0])), math.sin(math.atan2(v[1], v[0]))))
        return dist(p, apply(g, p))

    best = optimize.minimize(displacement, [0.1, 0.1], method="Nelder-Mead",
                             options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
    assert best.fun == pytest.approx(ell, abs=1e-8)


def test_geodesic_point_examples():
    xi = BoundaryPoint(0.0)
    assert geodesic_point(ORIGIN, xi, 0.0).z == 0
    assert geodesic_point(ORIGIN, xi, 1.0).z == pytest.approx(math.tanh(0.5))
    assert math.tanh(0.5) == pytest.approx(0.462117, abs=1e-6)


@settings(max_examples=60, deadline=None)
@given(disk_points(), angles, st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_geodesic_additivity(x, a, s, t):
    xi = BoundaryPoint(a)
    try:
        direct = geodesic_point(x, xi, s + t)
        stepped = geodesic_point(geodesic_point(x, xi, s), xi, t)
    except GeometryError:
        return  # too close to the boundary to represent
    assert dist(direct, stepped) < 1e-7 or abs(direct.z - stepped.z) < 1e-9


def test_projection_examples(rng):
    assert boundary_projection(ORIGIN, DiskPoint(0.5, 0)).angle == 0.0
    assert boundary_projection(ORIGIN, DiskPoint(0, -0.1)).angle == pytest.approx(3 * math.pi / 2)
    for _ in range(200):
        x = DiskPoint.from_complex(rng.uniform(0, 0.8) * np.exp(1j * rng.uniform(0, 6.28)))
        xi = BoundaryPoint(rng.uniform(0, 2 * math.pi))
        t = rng.uniform(0.5, 10)
        back = boundary_projection(x, geodesic_point(x, xi, t))
        assert abs(math.remainder(back.angle - xi.angle, 2 * math.pi)) < 1e-9


def test_angle_examples():
    assert angle_at(ORIGIN, BoundaryPoint(0), BoundaryPoint(math.pi)) == pytest.approx(math.pi)
    for phi in (0.1, 1.0, 2.5, math.pi):
        assert angle_at(ORIGIN, BoundaryPoint(0), BoundaryPoint(phi)) == pytest.approx(phi)
    assert angle_at(DiskPoint(0.3, 0), BoundaryPoint(0), BoundaryPoint(math.pi)) == pytest.approx(math.pi)
    with pytest.raises(GeometryError):
        angle_at(ORIGIN, BoundaryPoint(1.0), BoundaryPoint(1.0))


def test_shadow_angle_examples():
    assert shadow_angle(0.5) == pytest.approx(math.pi, abs=1e-12)
    # bisection oracle; the closed form gives 0.918798 at t = 1
    assert shadow_angle(1.0) == pytest.approx(bisect_shadow(1.0), abs=1e-10)
    assert shadow_angle(1.0) == pytest.approx(0.918798, abs=1e-6)
    t = dx_distance(math.pi / 2)
    assert shadow_angle(t) == pytest.approx(math.pi / 2, abs=1e-12)
    assert t == pytest.approx(math.asinh(math.sqrt(math.cosh(1) - 1)), abs=1e-12)
    with pytest.raises(GeometryError):
        shadow_angle(0.4)


@pytest.mark.parametrize("t", [0.7, 2.0, 5.0, 9.0])
def test_shadow_angle_matches_bisection(t):
    assert shadow_angle(t) == pytest.approx(bisect_shadow(t), rel=1e-8)


def test_shadow_round_trip():
    for t in np.linspace(0.5, 15, 300):
        assert abs(dx_distance(shadow_angle(t)) - t) < 1e-9


def test_busemann_examples():
    x = DiskPoint(0.1, -0.2)
    assert busemann(BoundaryPoint(0), x, x) == 0.0
    assert busemann(BoundaryPoint(0), ORIGIN, DiskPoint(0.5, 0)) == pytest.approx(math.log(3))
    y = DiskPoint(0, 0.3)
    assert busemann(BoundaryPoint(0), ORIGIN, y) == pytest.approx(-math.log(1.09 / 0.91))
    # truncated limit d(x, xi_T) - d(y, xi_T) at T = 40, in the hyperboloid model
    Q = ray_far_point(0j, 1 + 0j, 40.0)
    _, dy = towards_far_point(y.z, Q)
    assert 40.0 - dy == pytest.approx(busemann(BoundaryPoint(0), ORIGIN, y), abs=1e-9)
    assert 40.0 - dy == pytest.approx(-0.180488, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(disk_points(), disk_points(), disk_points())
def test_triangle_inequality(p, q, r):
    assert dist(p, r) <= dist(p, q) + dist(q, r) + 1e-9


@settings(max_examples=100, deadline=None)
@given(isometries(), disk_points(), disk_points(), angles, angles)
def test_isometry_invariance(g, x, y, a, b):
    xi, eta = BoundaryPoint(a), BoundaryPoint(b)
    gx, gy = apply(g, x), apply(g, y)
    if max(abs(gx.z), abs(gy.z)) > 0.999:
        return
    assert dist(gx, gy) == pytest.approx(dist(x, y), abs=1e-8, rel=1e-8)
    assert busemann(apply(g, xi), gx, gy) == pytest.approx(busemann(xi, x, y), abs=1e-8)
    if abs(math.remainder(a - b, 2 * math.pi)) > 1e-6:
        assert angle_at(gx, apply(g, xi), apply(g, eta)) == pytest.approx(angle_at(x, xi, eta), abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(disk_points(), disk_points(), disk_points(), angles)
def test_busemann_cocycle(x, y, z, a):
    xi = BoundaryPoint(a)
    assert busemann(xi, x, z) == pytest.approx(busemann(xi, x, y) + busemann(xi, y, z), abs=1e-9)


def test_shadow_equals_cone(rng):
    """d_x(xi, eta) > t iff the visual angle is below shadow_angle(t), by the defining equation."""
    for _ in range(300):
        x = DiskPoint.from_complex(rng.uniform(0, 0.7) * np.exp(1j * rng.uniform(0, 6.28)))
        xi, eta = BoundaryPoint(rng.uniform(0, 6.28)), BoundaryPoint(rng.uniform(0, 6.28))
        t = rng.uniform(0.5, 6.0)
        p, q = geodesic_point(x, xi, t), geodesic_point(x, eta, t)
        far_apart = dist(p, q) > 1.0  # at time t the rays are already more than 1 apart: d_x < t
        ang = angle_at(x, xi, eta)
        assert (dx_distance(ang) > t) == (not far_apart)
        assert (ang < shadow_angle(t)) == (not far_apart)


def test_isometry_determinant_and_inverse(rng):
    g = Isometry.identity()
    for _ in range(20):
        g = g @ Isometry.translation(rng.uniform(0, 1), rng.uniform(0, 6.28))
    assert abs(np.linalg.det(g.matrix()) - 1) < 1e-9
    h = Isometry.translation(1.3, 0.4)
    assert np.allclose((h @ h.inverse()).matrix(), np.eye(2), atol=1e-12)
    assert abs(apply(g, ORIGIN).z) < 1


def test_arc_contains():
    arc = Arc(BoundaryPoint(0.0), 0.5)
    assert arc.contains([0.4, 2 * math.pi - 0.4, 0.6]).tolist() == [True, True, False]
    full = Arc(BoundaryPoint(0.0), math.pi)
    assert not full.contains([math.pi])[0]
    assert not Arc(BoundaryPoint(1.0), 0.0).contains([1.0])[0]


def test_flow_and_hyperboloid():
    v = UnitTangent(DiskPoint(0.2, -0.1), 1.1)
    w = flow(flow(v, 1.5), 2.0)
    direct = flow(v, 3.5)
    assert w.base.z == pytest.approx(direct.base.z, abs=1e-12)
    assert w.direction == pytest.approx(direct.direction, abs=1e-10)
    X = hyperboloid(np.array([0.3 + 0.4j]))[0]
    assert -X[0] ** 2 + X[1] ** 2 + X[2] ** 2 == pytest.approx(-1.0)
    Q = ray_far_point(v.base.z, v.u, 5.0)
    _, d = towards_far_point(v.base.z, Q)
    assert d == pytest.approx(5.0, abs=1e-12)
