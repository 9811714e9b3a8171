"""Gamma-invariant potentials and their integrals along geodesics.

Two families are provided, both depending on the basepoint of a tangent
vector only: constants, and sums of smooth bumps centred on the orbit of a
point. The bump sum is evaluated by folding into the Dirichlet domain and
summing over the few orbit centres that can reach it.
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from .geometry import (
    ORIGIN,
    DiskPoint,
    UnitTangent,
    apply,
    disk_dist,
    flow_array,
    from_origin,
    ray_direction,
)
from .groups import FREE_SCHOTTKY, GeneratorSet, octagon_circumradius

DEFAULT_STEP = 0.01
_BLOCK = 8192
_RAY_CHUNK = 4.0


def bump_profile(s):
    """``exp(1 - 1/(1 - s^2))`` on ``|s| < 1``, zero outside; equals 1 at 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def simpson_weights(n: int) -> np.ndarray:
    if n < 2 or n % 2:
        raise ValueError("Simpson's rule needs an even number of intervals")
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def _even_intervals(length: float, h: float) -> int:
    n = max(2, int(math.ceil(length / h - 1e-12)))
    return n + (n % 2)


class Potential:
    """Base class; subclasses implement :meth:`evaluate` on arrays of basepoints."""

    kind = "abstract"
    basepoint_only = True

    def evaluate(self, z) -> np.ndarray:
        raise NotImplementedError

    def eval(self, v: UnitTangent) -> float:
        return float(self.evaluate(np.array([v.base.z]))[0])

    def spec(self) -> dict:
        raise NotImplementedError

    def hash(self) -> str:
        blob = json.dumps(self.spec(), sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def shifted(self, c: float) -> "Potential":
        raise NotImplementedError

    def line_integral(self, x: DiskPoint, y: DiskPoint, h: float = DEFAULT_STEP) -> float:
        if h <= 0:
            raise ValueError("quadrature step must be positive")
        return float(self.line_integrals(x.z, np.array([y.z]), h)[0])

    def line_integrals(self, x: complex, targets, h: float = DEFAULT_STEP) -> np.ndarray:
        raise NotImplementedError

    def ray_integral(self, base: complex, u: complex, length: float, h: float = DEFAULT_STEP) -> float:
        """Integral over ``[0, length]`` along the geodesic leaving ``base`` in direction ``u``."""
        raise NotImplementedError


class ConstantPotential(Potential):
    kind = "constant"

    def __init__(self, level: float):
        self.level = float(level)

    def __repr__(self):
        return f"ConstantPotential({self.level!r})"

    def evaluate(self, z) -> np.ndarray:
        return np.full(np.shape(z), self.level)

    def spec(self) -> dict:
        return {"kind": self.kind, "level": self.level}

    def shifted(self, c: float) -> "ConstantPotential":
        return ConstantPotential(self.level + c)

    def line_integrals(self, x: complex, targets, h: float = DEFAULT_STEP) -> np.ndarray:
        return self.level * disk_dist(x, np.asarray(targets, dtype=complex))

    def ray_integral(self, base, u, length, h=DEFAULT_STEP) -> float:
        return self.level * float(length)


class BumpSumPotential(Potential):
    """``offset + A * sum_g phi(d(p, g x0) / r)`` over the orbit of ``x0``.

    ``offset`` is zero for the plain bump family; it lets ``F + c`` stay in
    the same class.
    """

    kind = "bump-sum"

    def __init__(self, group: GeneratorSet, amplitude: float, radius: float,
                 center: DiskPoint = ORIGIN, offset: float = 0.0):
        if radius <= 0:
            raise ValueError("bump radius must be positive")
        self.group = group
        self.amplitude = float(amplitude)
        self.radius = float(radius)
        self.center = center
        self.offset = float(offset)
        self._la, self._lb = group.letter_su11()
        # isometric circle data: letter s moves q closer to 0 iff |conj(b) q + conj(a)| < 1
        self._ca = np.conj(self._la)[:, None]
        self._cb = np.conj(self._lb)[:, None]
        self.local_centers = self._local_orbit()

    def __repr__(self):
        return (f"BumpSumPotential(A={self.amplitude}, r={self.radius}, "
                f"center=({self.center.re}, {self.center.im}), offset={self.offset})")

    def _local_orbit(self) -> np.ndarray:
        from .orbits import enumerate_orbit

        if self.group.kind == FREE_SCHOTTKY:
            # the ping-pong domain is not compact: take the centre's images under
            # words of length <= 2, which are the only ones reaching the domain
            # while r stays below the gap between nested ping-pong disks
            letters = self.group.letters
            words = [()] + [(l,) for l in letters]
            words += [(l, m) for l in letters for m in letters if m != -l]
            return np.array([apply(self.group.element(w), self.center).z for w in words])
        reach = self.radius + octagon_circumradius() + 1e-9
        table = enumerate_orbit(self.group, ORIGIN, self.center, reach)
        return table.points

    def spec(self) -> dict:
        return {
            "kind": self.kind,
            "amplitude": self.amplitude,
            "radius": self.radius,
            "center": [self.center.re, self.center.im],
            "offset": self.offset,
            "group": self.group.describe(),
        }

    def shifted(self, c: float) -> "BumpSumPotential":
        return BumpSumPotential(self.group, self.amplitude, self.radius, self.center, self.offset + c)

    # -- evaluation -------------------------------------------------------

    def _refold(self, z, ga, gb):
        """Fold ``g z`` into the domain, updating the per-point elements ``g``."""
        q = (ga * z + gb) / (np.conj(gb) * z + np.conj(ga))
        for _ in range(10_000):
            m = np.abs(self._cb * q[None, :] + self._ca)
            j = np.argmin(m, axis=0)
            move = m[j, np.arange(q.size)] < 1.0 - 1e-13
            if not move.any():
                return q, ga, gb
            idx = np.nonzero(move)[0]
            sa, sb = self._la[j[idx]], self._lb[j[idx]]
            qi = q[idx]
            q[idx] = (sa * qi + sb) / (np.conj(sb) * qi + np.conj(sa))
            a, b = ga[idx], gb[idx]
            ga[idx] = sa * a + sb * np.conj(b)
            gb[idx] = sa * b + sb * np.conj(a)
        raise RuntimeError("folding did not terminate")

    def _bumps_at_folded(self, q) -> np.ndarray:
        c = self.local_centers[:, None]
        d = disk_dist(q[None, :], c)
        return bump_profile(d / self.radius).sum(axis=0)

    def evaluate(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        flat = z.reshape(-1)
        ga = np.ones(flat.size, dtype=complex)
        gb = np.zeros(flat.size, dtype=complex)
        q, _, _ = self._refold(flat.copy(), ga, gb)
        vals = self.offset + self.amplitude * self._bumps_at_folded(q)
        return vals.reshape(z.shape)

    # -- integration ------------------------------------------------------

    def line_integrals(self, x: complex, targets, h: float = DEFAULT_STEP) -> np.ndarray:
        """Composite Simpson along each segment ``[x, target]`` with step <= h."""
        if h <= 0:
            raise ValueError("quadrature step must be positive")
        targets = np.asarray(targets, dtype=complex).reshape(-1)
        x = complex(x)
        L = disk_dist(x, targets)
        out = self.offset * L
        nonzero = np.nonzero(L > 0.0)[0]
        if nonzero.size == 0:
            return out
        u = ray_direction(x, targets[nonzero])
        order = np.argsort(L[nonzero], kind="stable")
        for start in range(0, order.size, _BLOCK):
            blk = order[start:start + _BLOCK]
            Lb = L[nonzero][blk]
            ub = u[blk]
            n = _even_intervals(float(Lb.max()), h)
            w = simpson_weights(n)
            step = Lb / n
            ga = np.ones(blk.size, dtype=complex)
            gb = np.zeros(blk.size, dtype=complex)
            acc = np.zeros(blk.size)
            for k in range(n + 1):
                z = from_origin(x, np.tanh(0.5 * k * step) * ub)
                q, ga, gb = self._refold(z, ga, gb)
                acc += w[k] * self._bumps_at_folded(q)
            out[nonzero[blk]] += self.amplitude * acc * step
        return out

    def ray_integral(self, base: complex, u: complex, length: float, h: float = DEFAULT_STEP) -> float:
        """Long-ray version: the tangent vector is folded back into the domain every few units."""
        if length <= 0:
            return 0.0
        total = self.offset * length
        b = np.array([complex(base)])
        d = np.array([complex(u)])
        done = 0.0
        acc = 0.0
        while done < length - 1e-15:
            chunk = min(_RAY_CHUNK, length - done)
            b, d = self._fold_tangent(b, d)
            n = _even_intervals(chunk, h)
            ts = np.linspace(0.0, chunk, n + 1)
            pts = from_origin(b[0], np.tanh(ts / 2.0) * d[0])
            vals = self._bumps_at_folded(self._refold(pts, np.ones(n + 1, complex), np.zeros(n + 1, complex))[0])
            acc += float(simpson_weights(n) @ vals) * chunk / n
            b, d = flow_array(b, d, chunk)
            done += chunk
        return total + self.amplitude * acc

    def _fold_tangent(self, base, direction):
        ga = np.ones(base.size, dtype=complex)
        gb = np.zeros(base.size, dtype=complex)
        q, ga, gb = self._refold(base.copy(), ga, gb)
        deriv = 1.0 / (np.conj(gb) * base + np.conj(ga)) ** 2
        nd = direction * deriv
        return q, nd / np.abs(nd)


def make_potential(spec: dict, group: GeneratorSet | None = None) -> Potential:
    """Build a potential from a config block (``kind`` plus its parameters)."""
    kind = spec.get("kind", "constant")
    if kind == "constant":
        return ConstantPotential(float(spec.get("level", 0.0)))
    if kind == "bump-sum":
        if group is None:
            raise ValueError("a bump-sum potential needs its group")
        radius = spec.get("radius")
        if radius is None:
            radius = 0.3 * group.systole_bound()
        center = spec.get("center", [0.0, 0.0])
        return BumpSumPotential(
            group,
            float(spec.get("amplitude", 1.0)),
            float(radius),
            DiskPoint(float(center[0]), float(center[1])),
            float(spec.get("offset", 0.0)),
        )
    raise ValueError(f"unknown potential kind {kind!r}")
