"""Geodesic flow on the genus-two quotient: Liouville samples, ergodic averages, decay slopes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .boundary import shadow_arc
from .geometry import (
    BoundaryPoint,
    DiskPoint,
    UnitTangent,
    disk_dist,
    ray_direction,
    ray_endpoint,
    ray_point,
    to_origin,
    from_origin,
)
from .gibbs import PattersonMeasure, potential_integrals
from .groups import SURFACE_OCTAGON, GeneratorSet, in_domain, octagon_circumradius, octagon_inradius
from .orbits import OrbitTable
from .potential import DEFAULT_STEP, Potential


class SamplingError(RuntimeError):
    pass


class DecayError(ValueError):
    pass


def _require_octagon(group: GeneratorSet) -> None:
    if group.kind != SURFACE_OCTAGON:
        raise ValueError("Liouville sampling and quadrature need the compact (octagon) quotient")


def _disk_weight(z) -> np.ndarray:
    return (2.0 / (1.0 - np.abs(z) ** 2)) ** 2


def sample_liouville(group: GeneratorSet, seed: int, count: int, *,
                     efficiency_floor: float = 0.02, batch: int = 4096) -> list[UnitTangent]:
    """Tangent vectors with basepoints uniform in hyperbolic area on the domain."""
    _require_octagon(group)
    rng = np.random.default_rng(seed)
    r_max = math.tanh(octagon_circumradius() / 2.0)
    w_max = float(_disk_weight(r_max))
    bases: list[complex] = []
    proposed = 0
    while len(bases) < count:
        rad = r_max * np.sqrt(rng.random(batch))
        z = rad * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, batch))
        keep = in_domain(group, z) & (rng.random(batch) * w_max < _disk_weight(z))
        proposed += batch
        bases.extend(z[keep].tolist())
        if proposed >= 10 * batch and len(bases) < efficiency_floor * proposed:
            raise SamplingError(
                f"rejection efficiency {len(bases) / proposed:.4f} below floor {efficiency_floor}"
            )
    bases = bases[:count]
    dirs = rng.uniform(0.0, 2.0 * math.pi, count)
    return [UnitTangent(DiskPoint.from_complex(b), float(a)) for b, a in zip(bases, dirs)]


def domain_area_mc(group: GeneratorSet, seed: int, count: int) -> float:
    """Monte Carlo hyperbolic area of the domain from the bounding disk (for sampler checks)."""
    _require_octagon(group)
    rng = np.random.default_rng(seed)
    r_max = math.tanh(octagon_circumradius() / 2.0)
    rad = r_max * np.sqrt(rng.random(count))
    z = rad * np.exp(1j * rng.uniform(0.0, 2.0 * math.pi, count))
    vals = np.where(in_domain(group, z), _disk_weight(z), 0.0)
    return float(vals.mean() * math.pi * r_max**2)


# ---------------------------------------------------------------------------
# ergodic averages


@dataclass(frozen=True)
class BirkhoffEstimate:
    value: float
    horizon_T: float
    per_sample: tuple[float, ...]
    spread: float


def birkhoff_average(potential: Potential, v: UnitTangent, T: float, h: float = DEFAULT_STEP) -> float:
    """``(1/T) int_0^T F(phi_s v) ds``."""
    if T <= 0 or h <= 0:
        raise ValueError("horizon and step must be positive")
    return potential.ray_integral(v.base.z, v.u, T, h) / T


def birkhoff_estimate(potential: Potential, samples, T: float = 200.0, h: float = DEFAULT_STEP) -> BirkhoffEstimate:
    vals = tuple(birkhoff_average(potential, v, T, h) for v in samples)
    return BirkhoffEstimate(float(np.mean(vals)), T, vals, float(max(vals) - min(vals)))


def _gauss_panels(a: float, b: float, step: float, order: int = 8):
    n = max(1, int(math.ceil((b - a) / step)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    area: float


def liouville_quadrature(potential: Potential, group: GeneratorSet, grid_step: float = 0.05) -> QuadratureResult:
    """Area-normalised integral of F over the octagon, in polar coordinates per side sector."""
    _require_octagon(group)
    if not getattr(potential, "basepoint_only", False):
        raise ValueError("quadrature needs a potential that depends on the basepoint only")
    t_in = math.tanh(octagon_inradius())
    total = 0.0
    area = 0.0
    half = math.pi / 8.0
    for k in range(8):
        mid = k * math.pi / 4.0
        th, wth = _gauss_panels(mid - half, mid + half, grid_step)
        for theta, wt in zip(th, wth):
            rho_max = math.atanh(t_in / math.cos(theta - mid))
            rho, wr = _gauss_panels(0.0, rho_max, grid_step)
            z = np.tanh(rho / 2.0) * np.exp(1j * theta)
            jac = np.sinh(rho) * wr
            total += wt * float(np.dot(potential.evaluate(z), jac))
            area += wt * float(jac.sum())
    return QuadratureResult(total / area, area)


# ---------------------------------------------------------------------------
# shadow decay


@dataclass(frozen=True)
class DecaySlopeResult:
    slope: float
    t_grid: tuple[float, ...]
    log_masses: tuple[float, ...]
    residual: float
    empty_shadow_count: int
    intercept: float = 0.0
    atom_counts: tuple[int, ...] = ()


def fit_slope(ts, ys) -> tuple[float, float, float]:
    """Least-squares slope, intercept and max absolute residual."""
    ts = np.asarray(ts, dtype=float)
    ys = np.asarray(ys, dtype=float)
    fit = stats.linregress(ts, ys)
    resid = ys - (fit.intercept + fit.slope * ts)
    return float(fit.slope), float(fit.intercept), float(np.max(np.abs(resid)))


def decay_slope(mu: PattersonMeasure, x: DiskPoint, v: UnitTangent, t_grid, *, min_points: int = 4) -> DecaySlopeResult:
    """Slope of ``log mu_x(B_{x,t}(xi))`` in t, for ``xi`` the forward endpoint of v."""
    ts = [float(t) for t in t_grid]
    if any(b <= a for a, b in zip(ts, ts[1:])):
        raise DecayError("t grid must be increasing")
    if mu.basepoint != x:
        raise DecayError("measure basepoint differs from the shadow basepoint")
    xi = ray_endpoint(v)
    logs, counts = [], []
    for t in ts:
        n, m = mu.arc_mass(shadow_arc(x, t, xi))
        counts.append(n)
        logs.append(math.log(m) if m > 0 else float("nan"))
    good = [i for i, l in enumerate(logs) if not math.isnan(l)]
    empty = len(ts) - len(good)
    if len(good) < min_points:
        raise DecayError(f"only {len(good)} non-empty shadows; radius too small for this grid")
    slope, icpt, resid = fit_slope([ts[i] for i in good], [logs[i] for i in good])
    return DecaySlopeResult(slope, tuple(ts), tuple(logs), resid, empty, icpt, tuple(counts))


def bounded_difference_check(potential: Potential, delta: float, x: DiskPoint, v: UnitTangent,
                             t_grid, table: OrbitTable, s: float, *, shell: float | None = None,
                             h: float = DEFAULT_STEP, integrals: np.ndarray | None = None) -> list[float]:
    """``t delta - int_0^t F + log mu_x(B) - log mu_y(B)`` with ``y`` at time t on the ray from x to xi.

    Both measures are built from the same orbit points of ``table`` (seen from
    x and from y); for mu_y only the atoms projecting into B are integrated.
    Empty shadows give NaN.
    """
    if table.x != x:
        raise DecayError("orbit table is not based at x")
    if integrals is None:
        integrals = potential_integrals(table, potential, h)
    xi = ray_endpoint(v)
    u = complex(ray_direction(x.z, xi.z))
    keep = table.distances >= 1e-12
    if shell is not None:
        keep &= table.distances > table.complete_radius - shell
    pts = table.points[keep]
    ix = integrals[keep]
    dx = table.distances[keep]
    proj_x = table.projections[keep]
    out = []
    for t in t_grid:
        t = float(t)
        if t == 0.0:
            out.append(0.0)
            continue
        arc = shadow_arc(x, t, xi)
        in_x = arc.contains(proj_x)
        mass_x = math.fsum(np.exp(ix[in_x] - s * dx[in_x]))
        y = complex(ray_point(x.z, u, t))
        w = to_origin(y, pts)
        dy = disk_dist(y, pts)
        with np.errstate(invalid="ignore", divide="ignore"):
            proj_y = np.mod(np.angle(from_origin(y, w / np.abs(w))), 2.0 * math.pi)
        in_y = arc.contains(proj_y) & (dy >= 1e-12)
        iy = potential.line_integrals(y, pts[in_y], h)
        mass_y = math.fsum(np.exp(iy - s * dy[in_y]))
        if mass_x <= 0 or mass_y <= 0:
            out.append(float("nan"))
            continue
        along = potential.ray_integral(x.z, u, t, h)
        out.append(t * delta - along + math.log(mass_x) - math.log(mass_y))
    return out
