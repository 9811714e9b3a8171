import math

import numpy as np
import pytest

from gibbslab.geometry import ORIGIN, Arc, BoundaryPoint, DiskPoint, apply, boundary_projection, busemann, dist
from gibbslab.gibbs import (
    AnnulusSums,
    ExponentError,
    SparseArcError,
    WindowError,
    annulus_sums,
    estimate_critical_exponent,
    gibbs_cocycle,
    patterson_measure,
    poincare_partial,
    rn_check,
)
from gibbslab.groups import reduce_word
from gibbslab.orbits import OrbitTable, enumerate_orbit
from gibbslab.potential import ConstantPotential

ZERO = ConstantPotential(0.0)


@pytest.fixture(scope="module")
def table12(octagon):
    return enumerate_orbit(octagon, ORIGIN, ORIGIN, 12.0)


def synthetic(values: dict) -> AnnulusSums:
    return AnnulusSums(values, {n: 1 for n in values}, 1, max(values))


def single_atom(d=0.7):
    z = math.tanh(d / 2)
    return OrbitTable(
        x=ORIGIN, y=DiskPoint(z, 0.0), radius=1.0, words=((),), points=np.array([z + 0j]),
        distances=np.array([d]), projections=np.array([0.0]), complete_radius=1.0,
        pot_integrals=np.array([0.2]), potential_hash="fixed",
    )


def test_annulus_examples(table10):
    sums = annulus_sums(table10, ZERO)
    assert sums.sums == {n: float(c) for n, c in sums.counts.items()}
    assert sums.counts == table10.annulus_counts() | {n: 0 for n in range(11) if n not in table10.annulus_counts()}
    c = 0.4
    shifted = annulus_sums(table10, ConstantPotential(c))
    for n in range(4, 11):
        ratio = shifted.sums[n] / sums.sums[n]
        assert math.exp(c * (n - 1)) <= ratio <= math.exp(c * n)
    one = single_atom()
    assert annulus_sums(one, None, integrals=one.pot_integrals).sums[1] == pytest.approx(math.exp(0.2))
    assert math.exp(0.2) == pytest.approx(1.221403, abs=1e-6)


def test_synthetic_exponent():
    est = estimate_critical_exponent(synthetic({n: math.exp(0.8 * n) for n in range(1, 11)}), (3, 10))
    assert est.delta == pytest.approx(0.8, abs=1e-12)
    assert est.residual < 1e-12
    assert est.stable


def test_exponent_errors():
    sums = synthetic({n: math.exp(n) for n in range(1, 9)})
    with pytest.raises(WindowError):
        estimate_critical_exponent(sums, (2, 4))
    with pytest.raises(WindowError):
        estimate_critical_exponent(sums, (5, 12))
    holes = synthetic({1: 1.0, 2: 0.0, 3: 5.0, 4: 9.0, 5: 20.0, 6: 50.0})
    with pytest.raises(WindowError):
        estimate_critical_exponent(holes, (1, 6))


def test_octagon_exponent_and_shift(table12):
    base = estimate_critical_exponent(annulus_sums(table12, ZERO), (6, 12))
    assert base.delta == pytest.approx(1.0, abs=0.1)
    shifted = estimate_critical_exponent(annulus_sums(table12, ConstantPotential(0.3)), (6, 12))
    assert shifted.delta - base.delta == pytest.approx(0.3, abs=0.02)
    assert base.as_dict()["window"] == [6, 12]


def test_poincare_partial(table8, octagon):
    one = single_atom(0.0)
    assert poincare_partial(one, None, 1.0, integrals=np.zeros(1)) == 1.0
    assert poincare_partial(table8, ZERO, 0.0) == len(table8)
    assert poincare_partial(table8, ZERO, 200.0) == pytest.approx(1.0)
    vals = [poincare_partial(table8, ZERO, s) for s in (0.5, 1.0, 1.5, 2.0)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    tables = [enumerate_orbit(octagon, ORIGIN, ORIGIN, R) for R in (9.0, 10.0, 11.0, 12.0)]
    hi = np.array([poincare_partial(t, ZERO, 1.2) for t in tables])
    lo = np.array([poincare_partial(t, ZERO, 0.8) for t in tables])
    # above the exponent the increments shrink, below it they grow
    assert np.all(np.diff(np.diff(hi)) < 0)
    assert np.all(np.diff(lo) > 0) and np.diff(lo)[-1] > np.diff(lo)[0]
    assert hi[1] / hi[0] - 1 < 0.03
    assert lo[1] / lo[0] - 1 > 0.2


def test_patterson_weights(table8):
    mu = patterson_measure(table8, ZERO, 1.0)
    assert np.all(mu.weights > 0)
    assert mu.total_mass == pytest.approx(mu.weights.sum(), rel=1e-12)
    assert len(mu) == len(table8) - 1  # the identity has no projection
    assert math.exp(-2.0) == pytest.approx(0.135335, abs=1e-6)
    # weight of an atom is exp(-s d) for F = 0
    j = mu.words.index(table8.words[5])
    assert mu.weights[j] == pytest.approx(math.exp(-table8.distances[5]), rel=1e-14)
    with pytest.raises(ExponentError):
        patterson_measure(table8, ZERO, 1.0, delta_hat=0.995)


def test_constant_shift_invariance(table10):
    s = 1.05
    a = patterson_measure(table10, ZERO, s)
    c = 0.37
    b = patterson_measure(table10, ConstantPotential(c), s + c)
    assert a.words == b.words
    assert np.max(np.abs(b.weights / a.weights - 1)) < 1e-12


def test_equivariance(octagon, table8):
    """Push mu_x forward by each letter; rebuild weights from g x directly (oracle: word matrices)."""
    s = 1.05
    mu = patterson_measure(table8, ZERO, s)
    for l in octagon.letters:
        g = octagon.letter(l)
        pushed = mu.pushforward(g)
        gx = apply(g, ORIGIN)
        for w, a, wt in list(zip(pushed.words, pushed.angles, pushed.weights))[::37]:
            p = apply(octagon.element(reduce_word((l,) + w)), table8.y)
            d = dist(gx, p)
            assert wt == pytest.approx(math.exp(-s * d), rel=1e-9)
            ref = boundary_projection(gx, p).angle
            assert abs(math.remainder(a - ref, 2 * math.pi)) < 1e-9


def test_arc_mass(table8):
    mu = patterson_measure(table8, ZERO, 1.05)
    arc = Arc(BoundaryPoint(0.3), 0.2)
    mask = arc.contains(mu.angles)
    count, mass = mu.arc_mass(arc)
    assert count == int(mask.sum())
    assert mass == pytest.approx(float(mu.weights[mask].sum()), rel=1e-12)
    wrap = Arc(BoundaryPoint(6.2), 0.3)
    mask = wrap.contains(mu.angles)
    assert mu.arc_mass(wrap) == (int(mask.sum()), pytest.approx(float(mu.weights[mask].sum()), rel=1e-12))
    full = mu.arc_mass(Arc(BoundaryPoint(0.0), math.pi))
    assert full[1] <= mu.total_mass * (1 + 1e-12)
    assert mu.to_csv().splitlines()[0] == "proj_angle,weight"


def test_shell(table10):
    mu = patterson_measure(table10, ZERO, 1.05, shell=3.0)
    assert len(mu) == int(np.sum(table10.distances > 7.0))


def test_cocycle_examples(bump):
    x, y = ORIGIN, DiskPoint(0.5, 0.0)
    xi = BoundaryPoint(0.0)
    c = gibbs_cocycle(ZERO, 1.0, xi, x, y, 30.0)
    assert c.value == pytest.approx(math.log(3), abs=1e-3)
    assert c.value == pytest.approx(busemann(xi, x, y), abs=1e-3)
    assert c.convergence_gap < 1e-3
    assert gibbs_cocycle(bump, 1.1, xi, x, x).value == 0.0
    with pytest.raises(ValueError):
        gibbs_cocycle(ZERO, 1.0, xi, x, y, 5.0)
    # F + c with delta + c has the same integrand
    xi2 = BoundaryPoint(2.0)
    a = gibbs_cocycle(bump, 1.1, xi2, x, DiskPoint(0.1, 0.3), 20.0)
    b = gibbs_cocycle(bump.shifted(0.25), 1.35, xi2, x, DiskPoint(0.1, 0.3), 20.0)
    assert a.value == pytest.approx(b.value, abs=1e-9)


def test_cocycle_additivity(bump):
    xi = BoundaryPoint(1.3)
    x, y, z = ORIGIN, DiskPoint(0.2, -0.3), DiskPoint(-0.25, 0.1)
    cxy = gibbs_cocycle(bump, 1.1, xi, x, y, 30.0)
    cyz = gibbs_cocycle(bump, 1.1, xi, y, z, 30.0)
    cxz = gibbs_cocycle(bump, 1.1, xi, x, z, 30.0)
    gap = max(cxy.convergence_gap, cyz.convergence_gap, cxz.convergence_gap)
    assert abs(cxz.value - cxy.value - cyz.value) <= 2 * gap + 1e-6


def test_rn_check_basics(table10):
    mu = patterson_measure(table10, ZERO, 1.05)
    arc = Arc(BoundaryPoint(1.0), 0.1)
    same = rn_check(mu, mu, arc, ZERO, 1.0)
    assert same.ratio == 1.0 and same.predicted == 1.0
    other = patterson_measure(table10.rebased(DiskPoint(0.2, 0.0)), ZERO, 1.05)
    with pytest.raises(SparseArcError):
        rn_check(mu, other, Arc(BoundaryPoint(1.0), 0.2), ZERO, 1.0)
    with pytest.raises(SparseArcError):
        rn_check(mu, other, arc, ZERO, 1.0, min_atoms=10**6)


def test_rn_zero_potential(table12):
    """F = 0: measure ratios on small arcs follow exp(-s busemann) (shell atoms, nearby basepoint)."""
    s = 1.05
    y = DiskPoint(0.25, 0.1)
    rebased = table12.rebased(y)
    mu_x = patterson_measure(table12.restricted(12.0 - dist(ORIGIN, y)), ZERO, s, shell=3.0)
    mu_y = patterson_measure(rebased.restricted(rebased.complete_radius), ZERO, s, shell=3.0)
    rng = np.random.default_rng(11)
    good = 0
    for _ in range(20):
        arc = Arc(BoundaryPoint(rng.uniform(0, 2 * math.pi)), 0.1)
        chk = rn_check(mu_x, mu_y, arc, ZERO, s)
        good += chk.log_error <= 0.15
    assert good >= 16
