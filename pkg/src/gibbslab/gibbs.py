"""Poincare series, critical exponents, Patterson measures and the Gibbs cocycle."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .geometry import (
    TWO_PI,
    Arc,
    BoundaryPoint,
    DiskPoint,
    ray_direction,
    ray_far_point,
    towards_far_point,
)
from .orbits import OrbitTable
from .potential import DEFAULT_STEP, ConstantPotential, Potential


class WindowError(ValueError):
    """Regression window unusable: outside the complete range, too short, or hitting a zero sum."""


class ExponentError(ValueError):
    """Patterson parameter too close to (or below) the critical exponent."""


class SparseArcError(ValueError):
    pass


def potential_integrals(table: OrbitTable, potential: Potential | None, h: float = DEFAULT_STEP) -> np.ndarray:
    """Integrals of the potential from ``table.x`` to every orbit point, reusing cached ones."""
    if potential is None:
        return np.zeros(len(table))
    if isinstance(potential, ConstantPotential):
        return potential.level * table.distances
    if table.pot_integrals is not None and table.potential_hash == potential.hash():
        return table.pot_integrals
    return potential.line_integrals(table.x.z, table.points, h)


# ---------------------------------------------------------------------------
# annulus sums and the critical exponent


@dataclass(frozen=True)
class AnnulusSums:
    sums: dict[int, float]
    counts: dict[int, int]
    n_min: int
    n_max: int
    source: str = ""

    def series(self, window: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
        n0, n1 = window
        ns = np.arange(n0, n1 + 1)
        return ns, np.array([self.sums.get(int(n), 0.0) for n in ns])


def annulus_sums(table: OrbitTable, potential: Potential | None = None, h: float = DEFAULT_STEP,
                 integrals: np.ndarray | None = None) -> AnnulusSums:
    """``a_n = sum over n-1 < d <= n of exp(int F)``; annulus 0 holds the points at distance 0."""
    if integrals is None:
        integrals = potential_integrals(table, potential, h)
    idx = table.annulus_index
    top = int(idx.max()) if idx.size else 0
    sums = np.bincount(idx, weights=np.exp(integrals), minlength=top + 1)
    counts = np.bincount(idx, minlength=top + 1)
    n_max = int(math.floor(table.complete_radius + 1e-9))
    return AnnulusSums(
        sums={n: float(sums[n]) for n in range(top + 1)},
        counts={n: int(counts[n]) for n in range(top + 1)},
        n_min=1,
        n_max=n_max,
        source=f"R={table.radius:g} complete={table.complete_radius:g}",
    )


@dataclass(frozen=True)
class CriticalExponentEstimate:
    delta: float
    window: tuple[int, int]
    residual: float
    stderr: float
    intercept: float
    shifted_delta: float | None = None
    stable: bool = True

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "window": list(self.window),
            "residual": self.residual,
            "stderr": self.stderr,
            "intercept": self.intercept,
            "shifted_delta": self.shifted_delta,
            "stable": self.stable,
        }


def _fit_log_slope(ns: np.ndarray, values: np.ndarray):
    y = np.log(values)
    fit = stats.linregress(ns.astype(float), y)
    resid = y - (fit.intercept + fit.slope * ns)
    return float(fit.slope), float(fit.intercept), float(np.max(np.abs(resid))), float(fit.stderr)


def estimate_critical_exponent(sums: AnnulusSums, window: tuple[int, int]) -> CriticalExponentEstimate:
    """Least-squares slope of ``log a_n`` against ``n`` over ``window`` (inclusive)."""
    n0, n1 = int(window[0]), int(window[1])
    if n1 - n0 + 1 < 4:
        raise WindowError(f"window [{n0}, {n1}] has fewer than 4 annuli")
    if n0 < sums.n_min or n1 > sums.n_max:
        raise WindowError(
            f"window [{n0}, {n1}] leaves the complete range [{sums.n_min}, {sums.n_max}]"
        )
    ns, vals = sums.series((n0, n1))
    if np.any(vals <= 0):
        bad = int(ns[np.argmax(vals <= 0)])
        raise WindowError(f"annulus {bad} is empty; enumeration radius too small")
    delta, icpt, resid, se = _fit_log_slope(ns, vals)
    shifted = None
    stable = True
    if n1 - n0 >= 4:
        shifted, _, _, _ = _fit_log_slope(ns[1:], vals[1:])
        stable = abs(shifted - delta) <= 3.0 * se + 1e-12
    return CriticalExponentEstimate(delta, (n0, n1), resid, se, icpt, shifted, stable)


def poincare_partial(table: OrbitTable, potential: Potential | None, s: float,
                     h: float = DEFAULT_STEP, integrals: np.ndarray | None = None) -> float:
    """Partial Poincare series over the enumerated orbit."""
    if integrals is None:
        integrals = potential_integrals(table, potential, h)
    terms = np.exp(integrals - s * table.distances)
    return math.fsum(np.sort(terms))


# ---------------------------------------------------------------------------
# Patterson measures


@dataclass(frozen=True)
class PattersonMeasure:
    """Finite atomic measure; atoms sorted by boundary angle."""

    basepoint: DiskPoint
    s: float
    angles: np.ndarray
    weights: np.ndarray
    words: tuple = field(repr=False)
    total_mass: float
    potential_hash: str = ""

    def __len__(self) -> int:
        return self.angles.size

    @property
    def atoms(self) -> list[tuple[BoundaryPoint, float]]:
        return [(BoundaryPoint(float(a)), float(w)) for a, w in zip(self.angles, self.weights)]

    def _cumulative(self) -> np.ndarray:
        cached = self.__dict__.get("_cum")
        if cached is None:
            cached = np.concatenate([[0.0], np.cumsum(self.weights)])
            object.__setattr__(self, "_cum", cached)
        return cached

    def _range(self, lo: float, hi: float) -> tuple[int, int]:
        # open interval (lo, hi) with 0 <= lo <= hi <= 2pi
        i = int(np.searchsorted(self.angles, lo, side="right"))
        j = int(np.searchsorted(self.angles, hi, side="left"))
        return i, max(i, j)

    def arc_mass(self, arc: Arc) -> tuple[int, float]:
        """(atom count, mass) of the open arc, by binary search over sorted angles."""
        w = arc.half_width
        if w <= 0.0 or self.angles.size == 0:
            return 0, 0.0
        cum = self._cumulative()
        c = arc.center.angle
        if w >= math.pi:
            # everything except the antipode
            anti = (c + math.pi) % TWO_PI
            i = int(np.searchsorted(self.angles, anti, side="left"))
            j = int(np.searchsorted(self.angles, anti, side="right"))
            n = self.angles.size - (j - i)
            return n, float(cum[-1] - (cum[j] - cum[i]))
        lo, hi = c - w, c + w
        pieces = []
        if lo < 0.0:
            pieces = [(lo + TWO_PI, TWO_PI + 1.0), (-1.0, hi)]
        elif hi > TWO_PI:
            pieces = [(lo, TWO_PI + 1.0), (-1.0, hi - TWO_PI)]
        else:
            pieces = [(lo, hi)]
        count, mass = 0, 0.0
        for a, b in pieces:
            i, j = self._range(a, b)
            count += j - i
            mass += float(cum[j] - cum[i])
        return count, mass

    def pushforward(self, g) -> "PattersonMeasure":
        """Image measure under the isometry ``g`` (same weights, moved atoms and basepoint)."""
        a, b = g.su11
        z = np.exp(1j * self.angles)
        moved = np.mod(np.angle((a * z + b) / (np.conj(b) * z + np.conj(a))), TWO_PI)
        order = np.argsort(moved, kind="stable")
        base = (a * self.basepoint.z + b) / (np.conj(b) * self.basepoint.z + np.conj(a))
        return PattersonMeasure(
            DiskPoint.from_complex(base), self.s, moved[order], self.weights[order],
            tuple(self.words[i] for i in order), self.total_mass, self.potential_hash,
        )

    def to_csv(self) -> str:
        lines = ["proj_angle,weight"]
        lines += [f"{a!r},{w!r}" for a, w in zip(self.angles.tolist(), self.weights.tolist())]
        return "\n".join(lines) + "\n"


def patterson_measure(table: OrbitTable, potential: Potential | None, s: float, *,
                      delta_hat: float | None = None, margin: float = 0.01,
                      shell: float | None = None, min_radius: float = 0.0,
                      h: float = DEFAULT_STEP, integrals: np.ndarray | None = None) -> PattersonMeasure:
    """Atoms ``exp(int_x^{gy} F - s d(x, gy))`` at the projections of the orbit points.

    ``shell`` keeps only atoms with ``d > complete_radius - shell``; the weights
    are unchanged. Atoms at distance 0 have no projection and are dropped.
    """
    if delta_hat is not None and s <= delta_hat + margin:
        raise ExponentError(f"s = {s} is not above the estimated exponent {delta_hat} + {margin}")
    if table.radius < min_radius:
        raise ExponentError(f"table radius {table.radius} below the required {min_radius}")
    if integrals is None:
        integrals = potential_integrals(table, potential, h)
    keep = table.distances >= 1e-12
    if shell is not None:
        keep &= table.distances > table.complete_radius - shell
    idx = np.nonzero(keep)[0]
    logw = integrals[idx] - s * table.distances[idx]
    angles = table.projections[idx]
    order = np.lexsort((idx, angles))
    idx, angles, weights = idx[order], angles[order], np.exp(logw[order])
    words = tuple(table.words[i] for i in idx)
    total = math.fsum(weights)
    phash = potential.hash() if potential is not None else ""
    return PattersonMeasure(table.x, float(s), angles, weights, words, total, phash)


# ---------------------------------------------------------------------------
# Gibbs cocycle


@dataclass(frozen=True)
class CocycleValue:
    value: float
    truncation_T: float
    convergence_gap: float


def _cocycle_at(potential: Potential, delta: float, xi: BoundaryPoint, x: DiskPoint,
                y: DiskPoint, T: float, h: float) -> float:
    u = complex(ray_direction(x.z, xi.z))
    Q = ray_far_point(x.z, u, T)
    uy, Ly = towards_far_point(y.z, Q)
    iy = potential.ray_integral(y.z, uy, Ly, h) - delta * Ly
    ix = potential.ray_integral(x.z, u, T, h) - delta * T
    return iy - ix


def gibbs_cocycle(potential: Potential, delta: float, xi: BoundaryPoint, x: DiskPoint,
                  y: DiskPoint, T: float = 30.0, h: float = DEFAULT_STEP) -> CocycleValue:
    """``int_y^{xi_T}(F - delta) - int_x^{xi_T}(F - delta)`` with ``xi_T`` at distance T from x."""
    if T < 10:
        raise ValueError("truncation T must be at least 10")
    if x == y:
        return CocycleValue(0.0, T, 0.0)
    full = _cocycle_at(potential, delta, xi, x, y, T, h)
    half = _cocycle_at(potential, delta, xi, x, y, T / 2.0, h)
    return CocycleValue(full, T, abs(full - half))


@dataclass(frozen=True)
class RNCheck:
    ratio: float
    predicted: float
    atoms_x: int
    atoms_y: int
    cocycle: CocycleValue

    @property
    def log_error(self) -> float:
        return abs(math.log(self.ratio) - math.log(self.predicted))


def rn_check(mu_x: PattersonMeasure, mu_y: PattersonMeasure, arc: Arc, potential: Potential,
             delta: float, *, min_atoms: int = 50, max_half_width: float = 0.1,
             T: float = 30.0, h: float = DEFAULT_STEP) -> RNCheck:
    """Measure ratio on ``arc`` against ``exp(-C(x, y))`` at the arc centre."""
    if arc.half_width > max_half_width:
        raise SparseArcError(f"arc half-width {arc.half_width} exceeds {max_half_width}")
    if mu_x.basepoint == mu_y.basepoint:
        cx, mx = mu_x.arc_mass(arc)
        return RNCheck(1.0, 1.0, cx, cx, CocycleValue(0.0, T, 0.0))
    cx, mx = mu_x.arc_mass(arc)
    cy, my = mu_y.arc_mass(arc)
    if min(cx, cy) < min_atoms:
        raise SparseArcError(f"arc holds {cx} and {cy} atoms, need {min_atoms}")
    coc = gibbs_cocycle(potential, delta, arc.center, mu_x.basepoint, mu_y.basepoint, T, h)
    return RNCheck(mx / my, math.exp(-coc.value), cx, cy, coc)
