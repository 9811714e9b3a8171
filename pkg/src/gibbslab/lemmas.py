"""Empirical versions of the proof constants: half-space mass C, inclusion constants K and N,
and north-south dynamics of the generators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary import cone_arc
from .geometry import TWO_PI, Arc, BoundaryPoint, DiskPoint, apply, dx_distance, shadow_angle
from .gibbs import patterson_measure, potential_integrals
from .groups import GeneratorSet, axis_endpoints
from .orbits import OrbitTable
from .potential import DEFAULT_STEP, Potential


@dataclass(frozen=True)
class Lemma1Result:
    min_fraction: float
    fractions: tuple[float, ...]
    worst: tuple[float, float, float]  # (x.re, x.im, xi angle)


def lemma1_check(table: OrbitTable, group: GeneratorSet, potential: Potential, s: float,
                 samples, rng: np.random.Generator, h: float = DEFAULT_STEP) -> Lemma1Result:
    """Relative mass of the visual half-space ``A_{x,pi/2}(xi)`` at orbit translates of domain points.

    ``samples`` are domain points; each is moved by a random generator (or
    kept) and the measure is rebuilt from there over the atoms inside the
    complete radius.
    """
    fracs = []
    worst = (math.inf, (0.0, 0.0, 0.0))
    letters = [0] + group.letters
    for x0 in samples:
        l = letters[int(rng.integers(len(letters)))]
        x = x0 if l == 0 else apply(group.letter(l), x0)
        xi = BoundaryPoint(float(rng.uniform(0.0, TWO_PI)))
        tab = table.rebased(x)
        tab = tab.restricted(tab.complete_radius)
        mu = patterson_measure(tab, potential, s, integrals=potential_integrals(tab, potential, h))
        if mu.total_mass <= 0.0:
            raise ValueError(f"no orbit points within the complete radius around {x}; raise the lemma radius")
        _, m = mu.arc_mass(cone_arc(x, math.pi / 2.0, xi))
        f = m / mu.total_mass
        fracs.append(f)
        if f < worst[0]:
            worst = (f, (x.re, x.im, xi.angle))
    return Lemma1Result(min(fracs), tuple(fracs), worst[1])


def parallel_angle(s: float) -> float:
    """Visual half-angle at distance s behind a point of the cone of aperture pi/2 there."""
    return 2.0 * math.atan(math.exp(-s))


def cone_point_angle(alpha, t: float) -> np.ndarray:
    """Angle at x of the boundary point seen at angle alpha from the point at distance t towards xi.

    With x = 0 and xi = 1 the chart change is a real Moebius map, for which
    ``tan(phi/2) = e^{-t} tan(alpha/2)``.
    """
    return 2.0 * np.arctan(math.exp(-t) * np.tan(np.asarray(alpha) / 2.0))


@dataclass(frozen=True)
class Lemma2Result:
    K: int | None
    N: float | None
    violations: dict[int, int]
    samples: int


def inclusion_threshold(K: int, t_max: float = 20.0, step: float = 0.01) -> float | None:
    """Smallest grid t >= 1/2 from which ``parallel_angle(t + K) <= shadow_angle(t)`` holds up to t_max."""
    ts = np.arange(0.5, t_max + step / 2, step)
    ok = np.array([parallel_angle(t + K) <= shadow_angle(t) for t in ts])
    if not ok[-1]:
        return None
    bad = np.nonzero(~ok)[0]
    return float(ts[0] if bad.size == 0 else ts[bad[-1] + 1])


def lemma2_check(rng: np.random.Generator, k_max: int = 5, samples: int = 1000,
                 t_range: tuple[float, float] = (1.0, 20.0)) -> Lemma2Result:
    """Smallest K with ``A_{gamma(t+K), pi/2}(xi) inside B_{x,t}(xi)`` on every sample.

    By isometry invariance x = 0 and xi = 1. A sample draws t and a boundary
    point in the cone; it passes when its d_x-distance from xi exceeds t.
    """
    ts = rng.uniform(*t_range, samples)
    alphas = rng.uniform(-math.pi / 2.0, math.pi / 2.0, samples)
    violations = {}
    found = None
    for K in range(1, k_max + 1):
        bad = 0
        for t, a in zip(ts, alphas):
            phi = abs(float(cone_point_angle(a, t + K)))
            if phi > 0.0 and dx_distance(phi) <= t:
                bad += 1
        violations[K] = bad
        if bad == 0 and found is None:
            found = K
            break
    N = inclusion_threshold(found, t_range[1]) if found is not None else None
    return Lemma2Result(found, N, violations, samples)


# ---------------------------------------------------------------------------
# north-south dynamics


def _complement_ends(arc: Arc) -> tuple[float, float]:
    lo, hi = arc.bounds()
    return hi, lo + TWO_PI


def _maps_into(g, src: Arc, dst: Arc, n: int) -> bool:
    """Whether ``g^n`` maps the closed complement of ``src`` into ``dst`` (checked on the endpoints)."""
    a, b = g.su11
    z = np.exp(1j * np.array(_complement_ends(src)))
    for _ in range(n):
        z = (a * z + b) / (np.conj(b) * z + np.conj(a))
        z = z / np.abs(z)
    return bool(np.all(dst.contains(np.angle(z))))


def north_south(group: GeneratorSet, half_width: float = 0.3, n_max: int = 50) -> dict[int, int | None]:
    """For each generator, the least N with ``g^n(S - U) in V`` and ``g^-n(S - V) in U`` for N <= n <= n_max."""
    out: dict[int, int | None] = {}
    for i, g in enumerate(group.generators, start=1):
        rep, att = axis_endpoints(g)
        U, V = Arc(rep, half_width), Arc(att, half_width)
        ginv = g.inverse()
        holds = [_maps_into(g, U, V, n) and _maps_into(ginv, V, U, n) for n in range(1, n_max + 1)]
        N = None
        for n in range(n_max, 0, -1):
            if not holds[n - 1]:
                break
            N = n
        out[i] = N
    return out
