"""Constant-curvature geometry of the Poincare disk.

Points are stored as real coordinate pairs, boundary points as angles.
Isometries are real unimodular matrices acting on the upper half-plane;
the disk action is obtained by conjugating with the Cayley map
``z -> (z - i)/(z + i)``, which turns ``[[p, q], [r, s]]`` into the
SU(1,1) matrix ``[[a, b], [conj(b), conj(a)]]`` with

    a = ((p + s) + i(q - r)) / 2,    b = ((p - s) - i(q + r)) / 2.

Besides the scalar API there are a few vectorised helpers working on
complex numpy arrays (``mobius``, ``disk_dist``, ...). The rest of the
package uses those in its inner loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * math.pi
BOUNDARY_GUARD = 1e-12
DET_TOL = 1e-9
COSH1 = math.cosh(1.0)


class GeometryError(ValueError):
    """Raised for degenerate or out-of-model geometric input."""


def _norm_angle(theta: float) -> float:
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    # fmod of a tiny negative number can round to exactly 2*pi
    if theta >= TWO_PI:
        theta = 0.0
    return theta


@dataclass(frozen=True)
class DiskPoint:
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise GeometryError(f"non-finite disk point ({self.re}, {self.im})")
        if math.hypot(self.re, self.im) >= 1.0 - BOUNDARY_GUARD:
            raise GeometryError(
                f"point ({self.re}, {self.im}) is not inside the disk "
                f"(|z| must stay below 1 - {BOUNDARY_GUARD:g})"
            )

    @classmethod
    def from_complex(cls, z: complex) -> "DiskPoint":
        return cls(float(z.real), float(z.imag))

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)


ORIGIN = DiskPoint(0.0, 0.0)


@dataclass(frozen=True)
class BoundaryPoint:
    angle: float

    def __post_init__(self):
        if not math.isfinite(self.angle):
            raise GeometryError("non-finite boundary angle")
        object.__setattr__(self, "angle", _norm_angle(self.angle))

    @classmethod
    def from_complex(cls, w: complex) -> "BoundaryPoint":
        return cls(math.atan2(w.imag, w.real))

    @property
    def z(self) -> complex:
        return complex(math.cos(self.angle), math.sin(self.angle))


@dataclass(frozen=True)
class UnitTangent:
    base: DiskPoint
    direction: float

    def __post_init__(self):
        object.__setattr__(self, "direction", _norm_angle(self.direction))

    @property
    def u(self) -> complex:
        return complex(math.cos(self.direction), math.sin(self.direction))


@dataclass(frozen=True)
class Arc:
    """Open boundary arc ``{angle : |angle - center| < half_width}`` (mod 2pi)."""

    center: BoundaryPoint
    half_width: float

    def __post_init__(self):
        if not (0.0 <= self.half_width <= math.pi):
            raise GeometryError(f"arc half-width {self.half_width} outside [0, pi]")

    def contains(self, angles) -> np.ndarray:
        """Vectorised membership test for boundary angles."""
        diff = np.abs(_wrap_pi(np.asarray(angles, dtype=float) - self.center.angle))
        return diff < self.half_width

    def bounds(self) -> tuple[float, float]:
        return self.center.angle - self.half_width, self.center.angle + self.half_width


def _wrap_pi(x):
    """Wrap angles into [-pi, pi)."""
    return np.mod(np.asarray(x) + math.pi, TWO_PI) - math.pi


# ---------------------------------------------------------------------------
# vectorised kernels on complex arrays


def mobius(a, b, z):
    """Apply the SU(1,1) map ``[[a, b], [conj b, conj a]]`` to ``z``."""
    return (a * z + b) / (np.conj(b) * z + np.conj(a))


def to_origin(x, z):
    """Isometry moving ``x`` to 0, applied to ``z`` (works on the boundary too)."""
    return (z - x) / (1.0 - np.conj(x) * z)


def from_origin(x, z):
    """Inverse of :func:`to_origin`."""
    return (z + x) / (1.0 + np.conj(x) * z)


def disk_dist(p, q):
    """Hyperbolic distance between arrays of disk points (complex)."""
    num = np.abs(p - q)
    den = np.abs(1.0 - np.conj(p) * q)
    return 2.0 * np.arctanh(np.minimum(num / den, 1.0))


def radial_dist(z):
    """Distance from the origin."""
    return 2.0 * np.arctanh(np.abs(z))


def ray_point(x, u, t):
    """Point at arclength ``t`` from ``x`` along the ray with unit direction ``u`` at x.

    ``u`` is the direction of the ray as seen in the chart centred at x, i.e.
    the unit complex number pointing from 0 after moving x to the origin.
    """
    return from_origin(x, np.tanh(np.asarray(t) / 2.0) * u)


def ray_direction(x, target):
    """Unit direction at ``x`` of the ray towards ``target`` (point or boundary)."""
    w = to_origin(x, target)
    return w / np.abs(w)


# ---------------------------------------------------------------------------
# isometries


@dataclass(frozen=True)
class Isometry:
    """Orientation-preserving isometry stored as a unimodular half-plane matrix."""

    m00: float
    m01: float
    m10: float
    m11: float

    def __post_init__(self):
        det = self.m00 * self.m11 - self.m01 * self.m10
        # rounding floor of the determinant for large entries
        noise = 1e-14 * (abs(self.m00 * self.m11) + abs(self.m01 * self.m10))
        if not math.isfinite(det) or (det <= 0.0 and noise < 0.5):
            raise GeometryError(f"matrix with determinant {det} is not in SL(2,R)")
        if abs(det - 1.0) > max(DET_TOL, noise):
            k = 1.0 / math.sqrt(det)
            object.__setattr__(self, "m00", self.m00 * k)
            object.__setattr__(self, "m01", self.m01 * k)
            object.__setattr__(self, "m10", self.m10 * k)
            object.__setattr__(self, "m11", self.m11 * k)

    @classmethod
    def identity(cls) -> "Isometry":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_su11(cls, a: complex, b: complex) -> "Isometry":
        return cls(
            a.real + b.real,
            a.imag - b.imag,
            -a.imag - b.imag,
            a.real - b.real,
        )

    @classmethod
    def rotation(cls, phi: float) -> "Isometry":
        """Rotation of the disk about 0 by angle ``phi``."""
        return cls.from_su11(complex(math.cos(phi / 2), math.sin(phi / 2)), 0j)

    @classmethod
    def translation(cls, length: float, angle: float = 0.0) -> "Isometry":
        """Translation by ``length`` along the diameter pointing at ``angle``."""
        t = cls.from_su11(complex(math.cosh(length / 2)), complex(math.sinh(length / 2)))
        if angle == 0.0:
            return t
        r = cls.rotation(angle)
        return r @ t @ r.inverse()

    @classmethod
    def moving_to_origin(cls, x: DiskPoint) -> "Isometry":
        """The transvection along the geodesic through 0 and x sending x to 0."""
        z = x.z
        k = 1.0 / math.sqrt(1.0 - abs(z) ** 2)
        return cls.from_su11(complex(k), -z * k)

    @cached_property
    def su11(self) -> tuple[complex, complex]:
        p, q, r, s = self.m00, self.m01, self.m10, self.m11
        return complex(p + s, q - r) / 2.0, complex(p - s, -(q + r)) / 2.0

    @property
    def trace(self) -> float:
        return self.m00 + self.m11

    def matrix(self) -> np.ndarray:
        return np.array([[self.m00, self.m01], [self.m10, self.m11]])

    def __matmul__(self, other: "Isometry") -> "Isometry":
        m = self.matrix() @ other.matrix()
        return Isometry(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    def inverse(self) -> "Isometry":
        return Isometry(self.m11, -self.m01, -self.m10, self.m00)

    def power(self, n: int) -> "Isometry":
        base = self if n >= 0 else self.inverse()
        out = Isometry.identity()
        for _ in range(abs(n)):
            out = base @ out
        return out

    def __call__(self, obj):
        return apply(self, obj)

    def fingerprint(self, quantum: float = 1e-6) -> tuple[int, ...]:
        """Entries rounded to ``quantum`` after fixing the overall sign (``M ~ -M``)."""
        m = self.matrix().ravel()
        if m[np.argmax(np.abs(m))] < 0:
            m = -m
        return tuple(int(v) for v in np.rint(m / quantum))


def apply(g: Isometry, obj):
    """Act by ``g`` on a disk point, boundary point or unit tangent vector."""
    a, b = g.su11
    if isinstance(obj, DiskPoint):
        return DiskPoint.from_complex(mobius(a, b, obj.z))
    if isinstance(obj, BoundaryPoint):
        return BoundaryPoint.from_complex(mobius(a, b, obj.z))
    if isinstance(obj, UnitTangent):
        z = obj.base.z
        # derivative of the Mobius map is 1 / (conj(b) z + conj(a))^2
        deriv_arg = -2.0 * np.angle(np.conj(b) * z + np.conj(a))
        return UnitTangent(DiskPoint.from_complex(mobius(a, b, z)), obj.direction + deriv_arg)
    raise TypeError(f"cannot apply an isometry to {type(obj).__name__}")


# ---------------------------------------------------------------------------
# scalar operations


def dist(p: DiskPoint, q: DiskPoint) -> float:
    """Hyperbolic distance, ``2 artanh |p - q| / |1 - conj(p) q|``."""
    return float(disk_dist(p.z, q.z))


def _target_z(target) -> complex:
    if isinstance(target, (DiskPoint, BoundaryPoint)):
        return target.z
    raise TypeError(f"unsupported geodesic target {type(target).__name__}")


def geodesic_point(x: DiskPoint, target, t: float) -> DiskPoint:
    """Point at arclength ``t`` on the geodesic from ``x`` towards ``target``."""
    if t < 0:
        raise GeometryError("geodesic parameter must be nonnegative")
    w = to_origin(x.z, _target_z(target))
    if abs(w) < 1e-15:
        raise GeometryError("geodesic target coincides with the start point")
    return DiskPoint.from_complex(ray_point(x.z, w / abs(w), t))


def boundary_projection(x: DiskPoint, p: DiskPoint) -> BoundaryPoint:
    """Ideal endpoint of the ray from ``x`` through ``p``."""
    w = to_origin(x.z, p.z)
    if abs(w) < 1e-15:
        raise GeometryError("cannot project the basepoint itself")
    return BoundaryPoint.from_complex(from_origin(x.z, w / abs(w)))


def ray_endpoint(v: UnitTangent) -> BoundaryPoint:
    """Forward endpoint of the geodesic through ``v``."""
    return BoundaryPoint.from_complex(from_origin(v.base.z, v.u))


def angle_at(x: DiskPoint, xi: BoundaryPoint, eta: BoundaryPoint) -> float:
    """Visual angle between two boundary points seen from ``x``, in (0, pi]."""
    wx = to_origin(x.z, xi.z)
    we = to_origin(x.z, eta.z)
    ang = abs(float(np.angle(we / wx)))
    if ang < 1e-15:
        raise GeometryError("angle between a boundary point and itself is undefined")
    return ang


def visual_angles(x: complex, xi: complex, etas) -> np.ndarray:
    """Vectorised visual angles in [0, pi] from ``x`` between ``xi`` and each of ``etas``."""
    wx = to_origin(x, xi)
    we = to_origin(x, np.asarray(etas))
    return np.abs(np.angle(we / wx))


def shadow_angle(t: float) -> float:
    """Visual half-angle of the shadow ``B_{x,t}``.

    Two rays from a point at angle theta reach distance 1 apart at time t
    exactly when ``cos theta = (cosh^2 t - cosh 1) / sinh^2 t``.
    """
    if t < 0.5:
        raise GeometryError("shadows are defined for t >= 1/2")
    # half-angle form: sin^2(theta/2) = (cosh 1 - 1) / (2 sinh^2 t)
    s = math.sqrt((COSH1 - 1.0) / 2.0) / math.sinh(t)
    return 2.0 * math.asin(min(1.0, s))


def dx_distance(theta: float) -> float:
    """Inverse of :func:`shadow_angle`: the time at which rays at visual angle theta are 1 apart."""
    if not (0.0 < theta <= math.pi):
        raise GeometryError("visual angle must lie in (0, pi]")
    # sinh^2 t = (cosh 1 - 1) / (1 - cos theta)
    return math.asinh(math.sqrt((COSH1 - 1.0) / 2.0) / math.sin(theta / 2.0))


def busemann(xi: BoundaryPoint, x: DiskPoint, y: DiskPoint) -> float:
    """``lim_t d(x, xi_t) - d(y, xi_t)`` via the Poisson kernel."""
    w = xi.z
    return math.log(abs(w - x.z) ** 2 / (1.0 - abs(x.z) ** 2)) - math.log(
        abs(w - y.z) ** 2 / (1.0 - abs(y.z) ** 2)
    )


def busemann_array(xi, x, y):
    """Vectorised Busemann cocycle on complex inputs."""
    return np.log(np.abs(xi - x) ** 2 / (1.0 - np.abs(x) ** 2)) - np.log(
        np.abs(xi - y) ** 2 / (1.0 - np.abs(y) ** 2)
    )


# ---------------------------------------------------------------------------
# tangent vectors and the hyperboloid model (for points too far out for the disk)


def flow(v: UnitTangent, t: float) -> UnitTangent:
    """Geodesic flow: the unit tangent vector at time ``t`` along the geodesic through ``v``."""
    z, u = flow_array(v.base.z, v.u, t)
    return UnitTangent(DiskPoint.from_complex(complex(z)), float(np.angle(u)))


def flow_array(x, u, t):
    """Vectorised geodesic flow on (base, unit direction) pairs."""
    x = np.asarray(x, dtype=complex)
    w = np.tanh(np.asarray(t) / 2.0) * u
    z = from_origin(x, w)
    # derivative of from_origin at w is (1 - |x|^2) / (1 + conj(x) w)^2
    d = 1.0 / (1.0 + np.conj(x) * w) ** 2
    out = u * d
    return z, out / np.abs(out)


def hyperboloid(z):
    """Disk point(s) -> hyperboloid coordinates ``(X0, X1, X2)`` stacked on the last axis."""
    z = np.asarray(z, dtype=complex)
    r2 = np.abs(z) ** 2
    k = 1.0 / (1.0 - r2)
    return np.stack([(1.0 + r2) * k, 2.0 * z.real * k, 2.0 * z.imag * k], axis=-1)


def _boost(x: complex) -> np.ndarray:
    """Lorentz matrix of the transvection ``from_origin(x, .)`` (a pure boost)."""
    X = hyperboloid(x)
    gamma, n = X[0], X[1:]
    n2 = float(n @ n)
    M = np.empty((3, 3))
    M[:, 0] = X
    for j in (1, 2):
        s = np.zeros(2)
        s[j - 1] = 1.0
        ns = float(n @ s)
        spatial = s if n2 < 1e-300 else s + (gamma - 1.0) * ns / n2 * n
        M[0, j] = ns
        M[1:, j] = spatial
    return M


def ray_far_point(x: complex, u: complex, T: float) -> np.ndarray:
    """Hyperboloid coordinates of the point at distance ``T`` from ``x`` along direction ``u``."""
    M = _boost(complex(x))
    return M @ np.array([math.cosh(T), math.sinh(T) * u.real, math.sinh(T) * u.imag])


def minkowski(P, Q):
    return -P[..., 0] * Q[..., 0] + P[..., 1] * Q[..., 1] + P[..., 2] * Q[..., 2]


def towards_far_point(y: complex, Q: np.ndarray) -> tuple[complex, float]:
    """Unit direction at disk point ``y`` towards hyperboloid point ``Q``, and the distance."""
    Y = hyperboloid(y)
    c = -float(minkowski(Y, Q))
    d = math.acosh(max(c, 1.0))
    W = Q - c * Y
    # push the hyperboloid tangent W at Y to the disk chart: z = (X1 + i X2) / (1 + X0)
    dz = complex(W[1], W[2]) / (1.0 + Y[0]) - complex(Y[1], Y[2]) * W[0] / (1.0 + Y[0]) ** 2
    return dz / abs(dz), d
