"""Experiment drivers behind the command-line tool.

Each driver takes a resolved config and returns a :class:`RunResult`: summary
values, pass/fail verdicts, health flags, CSV artifacts and figures. Writing
them to disk is left to the caller.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import (
    TWO_PI,
    Arc,
    BoundaryPoint,
    DiskPoint,
    busemann,
    disk_dist,
    ray_direction,
    ray_endpoint,
)
from .gibbs import (
    CriticalExponentEstimate,
    SparseArcError,
    WindowError,
    annulus_sums,
    estimate_critical_exponent,
    gibbs_cocycle,
    patterson_measure,
    potential_integrals,
    rn_check,
)
from .groups import GeneratorSet, build_octagon, build_schottky, format_word, reduce_word
from .lemmas import lemma1_check, lemma2_check, north_south
from .orbits import (
    OrbitTable,
    _projections,
    cache_key,
    cache_root,
    enumerate_orbit,
    read_cache,
    write_cache,
)
from .plots import Figure
from .potential import ConstantPotential, Potential, make_potential
from .flow import (
    birkhoff_average,
    birkhoff_estimate,
    bounded_difference_check,
    decay_slope,
    fit_slope,
    liouville_quadrature,
    sample_liouville,
    DecayError,
)
from . import config as cfgmod


class HealthError(RuntimeError):
    """Infrastructure or health-metric failure (exit code 3)."""


@dataclass
class RunResult:
    command: str
    summary: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)
    health: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)  # filename -> text
    figures: list = field(default_factory=list)
    cache_keys: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    @property
    def healthy(self) -> bool:
        return all(self.health.values())


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# shared setup


def build_group(cfg: dict) -> GeneratorSet:
    if cfg["group.kind"] == "octagon":
        return build_octagon()
    k = cfg["group.rank"]
    angles = cfg["group.axis_angles"]
    if angles is None:
        angles = [j * math.pi / k for j in range(k)]
    return build_schottky(k, float(cfg["group.translation_length"]), angles)


def build_potential(cfg: dict, group: GeneratorSet) -> Potential:
    return make_potential(cfgmod.potential_block(cfg), group)


@dataclass
class Context:
    cfg: dict
    group: GeneratorSet
    potential: Potential
    cache_dir: Path

    @classmethod
    def from_config(cls, cfg: dict, cache_dir: Path | None = None) -> "Context":
        group = build_group(cfg)
        return cls(cfg, group, build_potential(cfg, group), Path(cache_dir or cache_root()))

    @property
    def h(self) -> float:
        return float(self.cfg["quadrature.step"])

    @property
    def x(self) -> DiskPoint:
        return DiskPoint(*map(float, self.cfg["orbit.base"]))

    @property
    def y(self) -> DiskPoint:
        return DiskPoint(*map(float, self.cfg["orbit.target"]))

    def rng(self, stream: int) -> np.random.Generator:
        return np.random.default_rng([int(self.cfg["seed"]), stream])


def orbit_table(ctx: Context, radius: float | None = None,
                potential: Potential | None = None) -> tuple[OrbitTable, str, bool]:
    """Orbit table with potential integrals, read from the cache when present."""
    R = float(ctx.cfg["orbit.radius"] if radius is None else radius)
    pot = ctx.potential if potential is None else potential
    meta = {
        "group": json.loads(json.dumps(ctx.group.describe())),
        "x": [ctx.x.re, ctx.x.im],
        "y": [ctx.y.re, ctx.y.im],
        "radius": R,
        "prune_margin": float(ctx.cfg["orbit.prune_margin"]),
        "potential_hash": pot.hash(),
        "h": ctx.h,
    }
    key = cache_key(meta)
    path = ctx.cache_dir / f"{key}.csv"
    if path.exists() and path.with_suffix(".json").exists():
        table = read_cache(path)
        return table, key, True
    table = enumerate_orbit(ctx.group, ctx.x, ctx.y, R, prune_margin=float(ctx.cfg["orbit.prune_margin"]))
    table = table.with_potential(pot, ctx.h)
    _, hit = write_cache(table, ctx.cache_dir, ctx.h)
    return table, key, hit


def _window(ctx: Context, sums) -> tuple[int, int]:
    n0, n1 = (int(v) for v in ctx.cfg["delta.window"])
    return n0, min(n1, sums.n_max)


def estimate_delta_for(ctx: Context, table: OrbitTable, integrals=None) -> CriticalExponentEstimate:
    sums = annulus_sums(table, ctx.potential, ctx.h, integrals=integrals)
    return estimate_critical_exponent(sums, _window(ctx, sums))


def _shell(ctx: Context):
    v = ctx.cfg["measure.shell"]
    return None if v is None else float(v)


# ---------------------------------------------------------------------------
# commands


def run_enum_orbit(ctx: Context) -> RunResult:
    res = RunResult("enum-orbit")
    table, key, hit = orbit_table(ctx)
    res.cache_keys.append(key)
    sums = annulus_sums(table, ctx.potential, ctx.h)
    res.summary.update(
        rows=len(table),
        radius=table.radius,
        complete_radius=table.complete_radius,
        cache_key=key,
        cache_hit=hit,
        cache_path=str(ctx.cache_dir / f"{key}.csv"),
        annulus_counts={str(n): c for n, c in sums.counts.items()},
    )
    n_top = int(math.floor(table.complete_radius + 1e-9))
    res.summary["all_annuli_populated"] = all(sums.counts.get(n, 0) > 0 for n in range(1, n_top + 1))
    res.artifacts["annuli.csv"] = _csv(
        ["n", "count", "weighted_sum"], [(n, sums.counts[n], sums.sums[n]) for n in sorted(sums.sums)]
    )
    return res


def run_estimate_delta(ctx: Context) -> RunResult:
    res = RunResult("estimate-delta")
    table, key, _ = orbit_table(ctx)
    res.cache_keys.append(key)
    ints = potential_integrals(table, ctx.potential, ctx.h)
    sums = annulus_sums(table, ctx.potential, ctx.h, integrals=ints)
    window = _window(ctx, sums)
    try:
        est = estimate_critical_exponent(sums, window)
    except WindowError as exc:
        raise HealthError(str(exc)) from exc
    res.summary["delta"] = est.as_dict()
    res.verdicts["window_stable"] = est.stable
    if ctx.group.kind == "surface-octagon" and ctx.potential.spec() == {"kind": "constant", "level": 0.0}:
        res.verdicts["classical_delta"] = abs(est.delta - 1.0) <= 0.10
    shifts = {}
    for c in ctx.cfg["delta.shift_levels"]:
        c = float(c)
        shifted = annulus_sums(table, integrals=ints + c * table.distances)
        d_c = estimate_critical_exponent(shifted, window).delta
        shifts[repr(c)] = {"delta": d_c, "difference": d_c - est.delta}
        res.verdicts[f"shift_{c:g}"] = abs((d_c - est.delta) - c) <= float(ctx.cfg["delta.shift_tolerance"])
    if shifts:
        res.summary["shift_test"] = shifts
    rows = [(n, sums.counts.get(n, 0), sums.sums.get(n, 0.0),
             math.log(sums.sums[n]) if sums.sums.get(n, 0.0) > 0 else float("nan"))
            for n in sorted(sums.sums)]
    res.artifacts["annulus_sums.csv"] = _csv(["n", "count", "sum", "log_sum"], rows)
    ns = np.arange(window[0], window[1] + 1)
    fig = Figure("annulus_sums.svg", "log annulus sums", "n", "log a_n")
    fig.add([r[0] for r in rows if r[3] == r[3]], [r[3] for r in rows if r[3] == r[3]], "log a_n")
    fig.add(ns, est.intercept + est.delta * ns, f"fit slope {est.delta:.4f}", "--")
    res.figures.append(fig)
    return res


def run_build_measure(ctx: Context) -> RunResult:
    res = RunResult("build-measure")
    table, key, _ = orbit_table(ctx)
    res.cache_keys.append(key)
    ints = potential_integrals(table, ctx.potential, ctx.h)
    est = estimate_delta_for(ctx, table, ints)
    eps = float(ctx.cfg["measure.epsilon"])
    s = est.delta + eps
    mu = patterson_measure(table, ctx.potential, s, delta_hat=est.delta, shell=_shell(ctx), integrals=ints)
    res.summary.update(delta=est.delta, s=s, atoms=len(mu), total_mass=mu.total_mass, shell=_shell(ctx))
    res.health["positive_weights"] = bool(np.all(mu.weights > 0)) and math.isfinite(mu.total_mass)
    res.artifacts["measure.csv"] = mu.to_csv()
    sens = []
    for e in ctx.cfg["measure.epsilon_sensitivity"]:
        m = patterson_measure(table, ctx.potential, est.delta + float(e), shell=_shell(ctx), integrals=ints)
        quarters = [m.arc_mass(Arc(BoundaryPoint(k * math.pi / 2), math.pi / 4))[1] / m.total_mass
                    for k in range(4)]
        sens.append((float(e), est.delta + float(e), m.total_mass, *quarters))
    res.artifacts["epsilon_sensitivity.csv"] = _csv(
        ["epsilon", "s", "total_mass", "q0", "q1", "q2", "q3"], sens
    )
    levels = [float(c) for c in ctx.cfg["delta.shift_levels"]] or [-0.5, 0.3]
    worst = 0.0
    for c in levels:
        m2 = patterson_measure(table, ctx.potential.shifted(c), s + c, shell=_shell(ctx),
                               integrals=ints + c * table.distances)
        worst = max(worst, float(np.max(np.abs(m2.weights / mu.weights - 1.0))))
    res.summary["shift_invariance_max_rel"] = worst
    res.verdicts["shift_invariance"] = worst <= 1e-12
    bins = np.linspace(0.0, TWO_PI, 65)
    hist = np.array([mu.arc_mass(Arc(BoundaryPoint((a + b) / 2), (b - a) / 2))[1] for a, b in zip(bins, bins[1:])])
    fig = Figure("measure.svg", "Patterson measure by angle", "boundary angle", "mass per bin")
    fig.add((bins[:-1] + bins[1:]) / 2, hist / mu.total_mass, None, "-")
    res.figures.append(fig)
    return res


def _translated_table(group: GeneratorSet, table: OrbitTable, letter: int, potential: Potential, h: float):
    g = group.letter(letter)
    a, b = g.su11
    mob = lambda z: (a * z + b) / (np.conj(b) * z + np.conj(a))  # noqa: E731
    gx = DiskPoint.from_complex(complex(mob(table.x.z)))
    pts = mob(table.points)
    d = disk_dist(gx.z, pts)
    words = tuple(reduce_word((letter,) + w) for w in table.words)
    moved = replace(table, x=gx, points=pts, distances=d, projections=_projections(gx.z, pts, d),
                    words=words, pot_integrals=None, potential_hash=None, elements=None)
    return moved, potential_integrals(moved, potential, h)


def equivariance_defect(ctx: Context, table: OrbitTable, s: float) -> list[tuple]:
    """Push mu_x forward by each letter and compare with the measure rebuilt at the image basepoint."""
    ints = potential_integrals(table, ctx.potential, ctx.h)
    mu = patterson_measure(table, ctx.potential, s, integrals=ints)
    rows = []
    for l in ctx.group.letters:
        pushed = mu.pushforward(ctx.group.letter(l))
        moved, mints = _translated_table(ctx.group, table, l, ctx.potential, ctx.h)
        rebuilt = patterson_measure(moved, ctx.potential, s, integrals=mints)
        ref = {w: (a, wt) for w, a, wt in zip(rebuilt.words, rebuilt.angles, rebuilt.weights)}
        dw = da = 0.0
        for w, a, wt in zip(pushed.words, pushed.angles, pushed.weights):
            ra, rw = ref[reduce_word((l,) + w)]
            dw = max(dw, abs(wt / rw - 1.0))
            da = max(da, abs(math.remainder(a - ra, TWO_PI)))
        rows.append((l, len(mu), dw, da))
    return rows


def _random_point_near(rng, x: DiskPoint, dmax: float) -> DiskPoint:
    from .geometry import ray_point

    d = rng.uniform(0.2, dmax)
    u = np.exp(1j * rng.uniform(0.0, TWO_PI))
    return DiskPoint.from_complex(complex(ray_point(x.z, u, d)))


def run_cocycle_check(ctx: Context) -> RunResult:
    res = RunResult("cocycle-check")
    cfg = ctx.cfg
    table, key, _ = orbit_table(ctx)
    res.cache_keys.append(key)
    ints = potential_integrals(table, ctx.potential, ctx.h)
    est = estimate_delta_for(ctx, table, ints)
    s = est.delta + float(cfg["measure.epsilon"])
    res.summary["delta"] = est.delta

    # (a) equivariance on a small table
    small, skey, _ = orbit_table(ctx, radius=float(cfg["equivariance.radius"]))
    res.cache_keys.append(skey)
    eq = equivariance_defect(ctx, small, s)
    worst = max(max(r[2], r[3]) for r in eq)
    res.summary["equivariance_max_defect"] = worst
    res.verdicts["equivariance"] = worst <= float(cfg["equivariance.tolerance"])
    res.artifacts["equivariance.csv"] = _csv(["letter", "atoms", "max_rel_weight", "max_angle"], eq)

    # (b) Radon-Nikodym derivative on random arcs
    rng = ctx.rng(1)
    x = table.x
    y = _random_point_near(rng, x, float(cfg["rn.max_base_distance"]))
    shell = _shell(ctx)
    mu_x = patterson_measure(table, ctx.potential, s, shell=shell, integrals=ints)
    keep = table.distances >= 1e-12
    if shell is not None:
        keep &= table.distances > table.complete_radius - shell
    sub = table.subset(np.nonzero(keep)[0]).rebased(y)
    mu_y = patterson_measure(sub, ctx.potential, s, integrals=potential_integrals(sub, ctx.potential, ctx.h))
    rows, errs, skipped = [], [], 0
    while len(errs) < int(cfg["rn.arcs"]):
        if skipped > 50 * int(cfg["rn.arcs"]):
            raise HealthError("too many sparse arcs; raise the orbit radius")
        arc = Arc(BoundaryPoint(float(rng.uniform(0.0, TWO_PI))), float(cfg["rn.half_width"]))
        try:
            chk = rn_check(mu_x, mu_y, arc, ctx.potential, est.delta, min_atoms=int(cfg["rn.min_atoms"]),
                           T=float(cfg["cocycle.T"]), h=ctx.h)
        except SparseArcError:
            skipped += 1
            continue
        errs.append(chk.log_error)
        rows.append((arc.center.angle, arc.half_width, chk.atoms_x, chk.atoms_y, chk.ratio, chk.predicted,
                     chk.log_error, chk.cocycle.convergence_gap))
    frac = float(np.mean(np.array(errs) <= float(cfg["rn.log_tolerance"])))
    res.summary.update(rn_base_y=[y.re, y.im], rn_pass_fraction=frac, rn_max_log_error=max(errs),
                       rn_sparse_arcs_skipped=skipped)
    res.verdicts["radon_nikodym"] = frac >= float(cfg["rn.pass_fraction"])
    res.artifacts["rn_arcs.csv"] = _csv(
        ["arc_center", "half_width", "atoms_x", "atoms_y", "ratio", "predicted", "log_error", "gap"], rows
    )

    # (c) cocycle against the closed-form Busemann function, and additivity for F
    zero = ConstantPotential(0.0)
    crow, worst_b, worst_add = [], 0.0, 0.0
    T = float(cfg["cocycle.T"])
    for _ in range(int(cfg["cocycle.samples"])):
        xi = BoundaryPoint(float(rng.uniform(0.0, TWO_PI)))
        p = [DiskPoint.from_complex(complex(r * np.exp(1j * a)))
             for r, a in zip(rng.uniform(0, 0.6, 3), rng.uniform(0, TWO_PI, 3))]
        c0 = gibbs_cocycle(zero, 1.0, xi, p[0], p[1], T)
        b = busemann(xi, p[0], p[1])
        worst_b = max(worst_b, abs(c0.value - b))
        cxy = gibbs_cocycle(ctx.potential, est.delta, xi, p[0], p[1], T, ctx.h)
        cyz = gibbs_cocycle(ctx.potential, est.delta, xi, p[1], p[2], T, ctx.h)
        cxz = gibbs_cocycle(ctx.potential, est.delta, xi, p[0], p[2], T, ctx.h)
        gap = cxy.convergence_gap + cyz.convergence_gap + cxz.convergence_gap
        add_err = abs(cxz.value - cxy.value - cyz.value)
        worst_add = max(worst_add, add_err - 2.0 * gap)
        crow.append((xi.angle, c0.value, b, cxy.value, cyz.value, cxz.value, gap))
    res.summary.update(busemann_max_error=worst_b, additivity_excess=worst_add)
    res.verdicts["cocycle_busemann"] = worst_b <= float(cfg["cocycle.busemann_tolerance"])
    res.verdicts["cocycle_additivity"] = worst_add <= 1e-9
    res.artifacts["cocycle.csv"] = _csv(
        ["xi", "zero_cocycle", "busemann", "c_xy", "c_yz", "c_xz", "gap_sum"], crow
    )
    return res


def _lambda_estimates(ctx: Context, samples) -> dict:
    cfg = ctx.cfg
    T = float(cfg["birkhoff.horizon"])
    birk = birkhoff_estimate(ctx.potential, samples[: int(cfg["birkhoff.samples"])], T, ctx.h)
    quad = liouville_quadrature(ctx.potential, ctx.group, float(cfg["lambda.grid_step"]))
    return {"birkhoff": birk, "quadrature": quad}


def run_decay_experiment(ctx: Context) -> RunResult:
    res = RunResult("decay-experiment")
    cfg = ctx.cfg
    table, key, _ = orbit_table(ctx)
    res.cache_keys.append(key)
    ints = potential_integrals(table, ctx.potential, ctx.h)
    est = estimate_delta_for(ctx, table, ints)
    s = est.delta + float(cfg["measure.epsilon"])
    mu = patterson_measure(table, ctx.potential, s, delta_hat=est.delta, shell=_shell(ctx), integrals=ints)
    n = max(int(cfg["decay.samples"]), int(cfg["birkhoff.samples"]))
    samples = sample_liouville(ctx.group, int(cfg["seed"]), n)
    lam = _lambda_estimates(ctx, samples)
    lam_b = lam["birkhoff"].value
    predicted = -est.delta + lam_b
    t_grid = [float(t) for t in cfg["decay.t_grid"]]
    series, slopes_rows, slopes, empty, total = [], [], [], 0, 0
    for i, v in enumerate(samples[: int(cfg["decay.samples"])]):
        try:
            r = decay_slope(mu, table.x, v, t_grid)
        except DecayError as exc:
            raise HealthError(f"sample {i}: {exc}") from exc
        empty += r.empty_shadow_count
        total += len(t_grid)
        slopes.append(r.slope)
        slopes_rows.append((i, v.base.re, v.base.im, v.direction, r.slope, r.residual, r.empty_shadow_count,
                            r.slope - predicted))
        for t, lm in zip(t_grid, r.log_masses):
            series.append((i, t, lm, birkhoff_average(ctx.potential, v, t, ctx.h)))
    median = float(np.median(slopes))
    res.summary.update(
        delta=est.as_dict(), s=s, shell=_shell(ctx), atoms=len(mu),
        lambda_birkhoff=lam_b, lambda_birkhoff_spread=lam["birkhoff"].spread,
        lambda_quadrature=lam["quadrature"].value, predicted_slope=predicted,
        slopes=slopes, median_slope=median, empty_shadows=empty,
    )
    res.health["empty_shadows"] = empty <= float(cfg["decay.max_empty_fraction"]) * total
    res.verdicts["theorem2_median"] = abs(median - predicted) <= float(cfg["decay.median_tolerance"])
    res.verdicts["theorem2_per_sample"] = all(
        abs(sl - predicted) <= float(cfg["decay.sample_tolerance"]) for sl in slopes
    )
    res.verdicts["birkhoff_spread"] = lam["birkhoff"].spread <= float(cfg["birkhoff.max_spread"])
    res.verdicts["lambda_agreement"] = abs(lam_b - lam["quadrature"].value) <= float(cfg["lambda.agreement"])
    res.verdicts["corollary"] = max(lam_b, lam["quadrature"].value) <= est.delta + float(cfg["lambda.corollary_slack"])
    res.artifacts["decay_series.csv"] = _csv(["sample_id", "t", "log_mass", "birkhoff_partial"], series)
    res.artifacts["slopes.csv"] = _csv(
        ["sample_id", "base_re", "base_im", "direction", "slope", "residual", "empty", "deviation"], slopes_rows
    )
    fig = Figure("decay.svg", "shadow mass decay", "t", "log mass")
    for i in range(len(slopes)):
        pts = [(t, lm) for sid, t, lm, _ in series if sid == i and lm == lm]
        fig.add([p[0] for p in pts], [p[1] for p in pts], None, "-")
    ts = np.array(t_grid)
    ref = np.median([r[2] for r in series if r[1] == t_grid[0] and r[2] == r[2]])
    fig.add(ts, ref + predicted * (ts - ts[0]), f"slope {predicted:.3f}", "k--")
    res.figures.append(fig)
    return res


def run_lambda_estimate(ctx: Context) -> RunResult:
    res = RunResult("lambda-estimate")
    cfg = ctx.cfg
    table, key, _ = orbit_table(ctx)
    res.cache_keys.append(key)
    est = estimate_delta_for(ctx, table)
    samples = sample_liouville(ctx.group, int(cfg["seed"]), int(cfg["birkhoff.samples"]))
    lam = _lambda_estimates(ctx, samples)
    T = float(cfg["birkhoff.horizon"])
    rows = []
    for i, (v, val) in enumerate(zip(samples, lam["birkhoff"].per_sample)):
        rows.append((i, val, birkhoff_average(ctx.potential, v, 2 * T, ctx.h)))
    fine = liouville_quadrature(ctx.potential, ctx.group, float(cfg["lambda.grid_step"]) / 2)
    lb, lq = lam["birkhoff"].value, lam["quadrature"].value
    res.summary.update(
        delta=est.delta, lambda_birkhoff=lb, spread=lam["birkhoff"].spread, lambda_quadrature=lq,
        quadrature_area=lam["quadrature"].area, quadrature_halved_step_change=abs(fine.value - lq),
        doubling_max_change=max(abs(r[2] - r[1]) for r in rows),
    )
    res.verdicts["birkhoff_spread"] = lam["birkhoff"].spread <= float(cfg["birkhoff.max_spread"])
    res.verdicts["lambda_agreement"] = abs(lb - lq) <= float(cfg["lambda.agreement"])
    res.verdicts["corollary"] = max(lb, lq) <= est.delta + float(cfg["lambda.corollary_slack"])
    res.artifacts["birkhoff.csv"] = _csv(["sample_id", "value", "value_double_T"], rows)
    fig = Figure("birkhoff.svg", "Birkhoff averages", "sample", "average")
    fig.add([r[0] for r in rows], [r[1] for r in rows], f"T={T:g}")
    fig.add([r[0] for r in rows], [r[2] for r in rows], f"T={2 * T:g}")
    fig.add([0, len(rows) - 1], [lq, lq], "quadrature", "k--")
    res.figures.append(fig)
    return res


def run_lemma_checks(ctx: Context) -> RunResult:
    res = RunResult("lemma-checks")
    cfg = ctx.cfg
    table, key, _ = orbit_table(ctx)
    res.cache_keys.append(key)
    ints = potential_integrals(table, ctx.potential, ctx.h)
    est = estimate_delta_for(ctx, table, ints)
    s = est.delta + float(cfg["measure.epsilon"])

    small, skey, _ = orbit_table(ctx, radius=float(cfg["lemma.radius"]))
    res.cache_keys.append(skey)
    rng = ctx.rng(2)
    bases = [v.base for v in sample_liouville(ctx.group, int(cfg["seed"]) + 1, int(cfg["lemma.samples"]))]
    l1 = lemma1_check(small, ctx.group, ctx.potential, s, bases, rng, ctx.h)
    res.summary["lemma1"] = {"C": l1.min_fraction, "worst_x_xi": list(l1.worst)}
    res.verdicts["lemma1"] = l1.min_fraction > float(cfg["lemma.floor"])
    res.artifacts["lemma1.csv"] = _csv(["sample_id", "fraction"], list(enumerate(l1.fractions)))

    l2 = lemma2_check(rng, int(cfg["lemma.k_max"]), int(cfg["lemma.k_samples"]))
    res.summary["lemma2"] = {"K": l2.K, "N": l2.N, "violations": {str(k): v for k, v in l2.violations.items()}}
    res.verdicts["lemma2"] = l2.K is not None

    ns = north_south(ctx.group, float(cfg["lemma.northsouth_half_width"]), int(cfg["lemma.northsouth_max"]))
    res.summary["northsouth"] = {str(k): v for k, v in ns.items()}
    res.verdicts["northsouth"] = all(v is not None for v in ns.values())

    t_grid = [float(t) for t in cfg["bounded.t_grid"]]
    samples = sample_liouville(ctx.group, int(cfg["seed"]), int(cfg["bounded.samples"]))
    rows, values = [], []
    for i, v in enumerate(samples):
        # the finite-s measures are s-conformal, so the check uses s as the exponent
        q = bounded_difference_check(ctx.potential, s, table.x, v, t_grid, table, s,
                                     shell=_shell(ctx), h=ctx.h, integrals=ints)
        values.append(q)
        rows += [(i, t, val) for t, val in zip(t_grid, q)]
    arr = np.array(values)
    mean = np.nanmean(arr, axis=0)
    trend, _, _ = fit_slope(t_grid, mean)
    D = float(np.nanmax(np.abs(arr)))
    res.summary["bounded_difference"] = {"trend": trend, "D": D, "mean": mean.tolist()}
    res.verdicts["bounded_difference"] = abs(trend) <= float(cfg["bounded.trend_tolerance"])
    res.health["bounded_nonempty"] = bool(np.isfinite(arr).mean() >= 1.0 - float(cfg["decay.max_empty_fraction"]))
    res.artifacts["bounded.csv"] = _csv(["sample_id", "t", "value"], rows)
    fig = Figure("bounded.svg", "bounded-difference quantity", "t", "value")
    for i in range(len(values)):
        fig.add(t_grid, values[i], None, "-")
    fig.add(t_grid, mean, f"mean, trend {trend:.3f}", "k-o")
    res.figures.append(fig)
    return res


COMMANDS = {
    "enum-orbit": run_enum_orbit,
    "estimate-delta": run_estimate_delta,
    "build-measure": run_build_measure,
    "cocycle-check": run_cocycle_check,
    "decay-experiment": run_decay_experiment,
    "lemma-checks": run_lemma_checks,
    "lambda-estimate": run_lambda_estimate,
}
