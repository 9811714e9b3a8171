"""Explicit Fuchsian groups: Schottky free groups and the genus-2 octagon group.

Words are tuples of signed generator indices, ``(1, -2, 1)`` meaning
``g1 g2^-1 g1``. Both group families come with a Dirichlet domain centred at
the origin whose sides are the bisectors between 0 and ``s(0)`` for the
letters ``s``: for the octagon these are the eight sides, for a Schottky
group the isometric circles. Folding a point into the domain is therefore
the same greedy rule for both: keep applying the letter that brings the
point closest to the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Arc,
    BoundaryPoint,
    DiskPoint,
    GeometryError,
    Isometry,
    TWO_PI,
    _wrap_pi,
    apply,
    mobius,
)

Word = tuple[int, ...]

FREE_SCHOTTKY = "free-schottky"
SURFACE_OCTAGON = "surface-octagon"

FOLD_MAX_ITER = 10_000

# cosh of the octagon inradius, cot(pi/8) = 1 + sqrt 2
_OCT_COSH_INRADIUS = 1.0 + math.sqrt(2.0)


class GroupError(ValueError):
    """Invalid group data (ping-pong failure, bad relator, non-hyperbolic element)."""


class PingPongError(GroupError):
    def __init__(self, first: int, second: int, message: str):
        super().__init__(message)
        self.pair = (first, second)


class FoldError(RuntimeError):
    pass


def format_word(word: Word) -> str:
    """Serialise a word as ``+1.-2.+1`` (empty word -> ``e``)."""
    if not word:
        return "e"
    return ".".join(f"{l:+d}" for l in word)


def parse_word(text: str) -> Word:
    text = text.strip()
    if text in ("", "e"):
        return ()
    return tuple(int(part) for part in text.split("."))


def inverse_word(word: Word) -> Word:
    return tuple(-l for l in reversed(word))


def reduce_word(word: Word) -> Word:
    out: list[int] = []
    for l in word:
        if out and out[-1] == -l:
            out.pop()
        else:
            out.append(l)
    return tuple(out)


def is_reduced(word: Word) -> bool:
    return all(word[i] != -word[i + 1] for i in range(len(word) - 1))


def letter_key(l: int) -> tuple[int, int]:
    """Letter order +1 < -1 < +2 < -2 < ..."""
    return (abs(l), 0 if l > 0 else 1)


def word_key(word: Word) -> tuple:
    """Shortlex key used for deterministic ordering."""
    return (len(word), tuple(letter_key(l) for l in word))


@dataclass(frozen=True)
class GeneratorSet:
    generators: tuple[Isometry, ...]
    kind: str
    ping_pong_arcs: tuple[Arc, ...] | None = None
    params: dict = field(default_factory=dict, compare=False)

    @property
    def rank(self) -> int:
        return len(self.generators)

    @property
    def letters(self) -> list[int]:
        return [s * (i + 1) for i in range(self.rank) for s in (1, -1)]

    def letter(self, l: int) -> Isometry:
        g = self.generators[abs(l) - 1]
        return g if l > 0 else g.inverse()

    def element(self, word: Word) -> Isometry:
        out = Isometry.identity()
        for l in word:
            out = out @ self.letter(l)
        return out

    def letter_su11(self) -> tuple[np.ndarray, np.ndarray]:
        """SU(1,1) coefficient arrays ``(a, b)`` for the letters, in ``self.letters`` order."""
        pairs = [self.letter(l).su11 for l in self.letters]
        return (
            np.array([p[0] for p in pairs], dtype=complex),
            np.array([p[1] for p in pairs], dtype=complex),
        )

    def systole_bound(self) -> float:
        """Smallest displacement of the origin by a letter."""
        return min(2.0 * math.acosh(abs(g.su11[0])) for g in self.generators)

    def describe(self) -> dict:
        return {"kind": self.kind, **self.params}


# ---------------------------------------------------------------------------
# construction


def _ping_pong_arc(g: Isometry) -> Arc:
    """Boundary arc cut out by the isometric circle of ``g^-1`` (the disk ``g`` maps into)."""
    a, b = g.inverse().su11
    # isometric circle |conj(b) z + conj(a)| = 1: centre -conj(a)/conj(b), radius 1/|b|
    centre = -np.conj(a) / np.conj(b)
    return Arc(BoundaryPoint.from_complex(centre), math.atan(1.0 / abs(b)))


def _arcs_overlap(p: Arc, q: Arc) -> bool:
    sep = abs(float(_wrap_pi(p.center.angle - q.center.angle)))
    return sep <= p.half_width + q.half_width


def build_schottky(k: int, translation_length: float, axis_angles) -> GeneratorSet:
    """Schottky group generated by translations along ``k`` diameters.

    Generator ``j`` translates by ``translation_length`` towards the boundary
    point at ``axis_angles[j]``. The ping-pong configuration is verified and a
    :class:`PingPongError` names the first overlapping pair of arcs.
    """
    axis_angles = [float(a) for a in axis_angles]
    if k < 2:
        raise GroupError("a Schottky group needs at least two generators")
    if len(axis_angles) != k:
        raise GroupError(f"expected {k} axis angles, got {len(axis_angles)}")
    if translation_length <= 0:
        raise GroupError("translation length must be positive")
    for i in range(k):
        for j in range(i + 1, k):
            if abs(math.sin(axis_angles[i] - axis_angles[j])) < 1e-9:
                raise GroupError(f"axes {i + 1} and {j + 1} are parallel")

    gens = tuple(Isometry.translation(translation_length, th) for th in axis_angles)
    letters = [s * (i + 1) for i in range(k) for s in (1, -1)]
    arcs = {}
    for l in letters:
        g = gens[abs(l) - 1] if l > 0 else gens[abs(l) - 1].inverse()
        arcs[l] = _ping_pong_arc(g)
    for i, l in enumerate(letters):
        for m in letters[i + 1:]:
            if _arcs_overlap(arcs[l], arcs[m]):
                raise PingPongError(
                    l, m,
                    f"ping-pong violation: arcs of letters {l:+d} and {m:+d} overlap "
                    f"(centres {arcs[l].center.angle:.4f}, {arcs[m].center.angle:.4f}, "
                    f"half-width {arcs[l].half_width:.4f})",
                )
    # each letter maps the complement of its inverse's arc onto its own arc
    for l in letters:
        g = gens[abs(l) - 1] if l > 0 else gens[abs(l) - 1].inverse()
        own, inv = arcs[l], arcs[-l]
        lo, hi = inv.bounds()
        probe = [BoundaryPoint(inv.center.angle + math.pi)]
        probe += [BoundaryPoint(t) for t in np.linspace(hi + 1e-6, lo + TWO_PI - 1e-6, 64)]
        images = np.array([apply(g, p).angle for p in probe])
        if not np.all(np.abs(_wrap_pi(images - own.center.angle)) <= own.half_width + 1e-12):
            raise PingPongError(l, -l, f"letter {l:+d} does not map the complement of arc {-l:+d} into arc {l:+d}")
    for g in gens:
        if abs(g.trace) <= 2.0:
            raise GroupError("non-hyperbolic Schottky generator")
    return GeneratorSet(
        gens,
        FREE_SCHOTTKY,
        tuple(arcs[l] for l in letters),
        {"k": k, "translation_length": float(translation_length), "axis_angles": axis_angles},
    )


# words for a, b, c, d in the side-pairing letters with [a,b][c,d] = 1
OCTAGON_COMMUTATOR_WORDS: tuple[Word, Word, Word, Word] = ((1,), (4, -3, 2), (4, -2), (2, -3))
# cyclic boundary relator of the opposite-side pairing
OCTAGON_RELATOR: Word = (1, -2, 3, -4, -1, 2, -3, 4)


def octagon_inradius() -> float:
    return math.acosh(_OCT_COSH_INRADIUS)


def octagon_circumradius() -> float:
    # regular octagon with vertex angle pi/4: cosh(circumradius) = cot^2(pi/8)
    return math.acosh(_OCT_COSH_INRADIUS**2)


def octagon_vertices() -> np.ndarray:
    """The eight vertices, at angles (2k+1) pi/8."""
    rho = math.tanh(octagon_circumradius() / 2.0)
    return rho * np.exp(1j * (2 * np.arange(8) + 1) * math.pi / 8)


def _commutator(g: Isometry, h: Isometry) -> Isometry:
    return g @ h @ g.inverse() @ h.inverse()


def build_octagon() -> GeneratorSet:
    """The genus-2 group pairing opposite sides of the regular octagon with angle pi/4.

    Generator ``k`` (k = 1..4) translates by twice the inradius towards
    the boundary point at angle ``(k-1) pi/4``, mapping side ``k+4`` onto side ``k``.
    """
    length = 2.0 * octagon_inradius()
    gens = tuple(Isometry.translation(length, k * math.pi / 4) for k in range(4))
    group = GeneratorSet(gens, SURFACE_OCTAGON, None, {"genus": 2})
    a, b, c, d = (group.element(w) for w in OCTAGON_COMMUTATOR_WORDS)
    for name, rel in (
        ("[a,b][c,d]", _commutator(a, b) @ _commutator(c, d)),
        ("side relator", group.element(OCTAGON_RELATOR)),
    ):
        m = rel.matrix()
        err = min(np.abs(m - np.eye(2)).max(), np.abs(m + np.eye(2)).max())
        if err > 1e-8:
            raise GroupError(f"octagon {name} is not the identity (error {err:.3g})")
    return group


# ---------------------------------------------------------------------------
# folding


def fold_to_domain(group: GeneratorSet, p: DiskPoint) -> tuple[DiskPoint, Word]:
    """Reduce ``p`` into the Dirichlet domain at 0.

    Returns ``(p', w)`` with ``w . p = p'``.
    """
    la, lb = group.letter_su11()
    letters = group.letters
    z = p.z
    word: list[int] = []
    for _ in range(FOLD_MAX_ITER):
        images = mobius(la, lb, z)
        j = int(np.argmin(np.abs(images)))
        if abs(images[j]) >= abs(z) - 1e-15:
            return DiskPoint.from_complex(z), tuple(reversed(word))
        z = images[j]
        word.append(letters[j])
    raise FoldError(f"folding did not terminate within {FOLD_MAX_ITER} steps")


def fold_array(la, lb, z, max_iter: int = FOLD_MAX_ITER):
    """Vectorised fold of a complex array; returns the folded points only."""
    z = np.array(z, dtype=complex, copy=True)
    active = np.arange(z.size)
    flat = z.reshape(-1)
    for _ in range(max_iter):
        if active.size == 0:
            return flat.reshape(z.shape)
        cur = flat[active]
        images = mobius(la[:, None], lb[:, None], cur[None, :])
        mags = np.abs(images)
        j = np.argmin(mags, axis=0)
        best = mags[j, np.arange(cur.size)]
        move = best < np.abs(cur) - 1e-15
        idx = active[move]
        flat[idx] = images[j[move], np.nonzero(move)[0]]
        active = idx
    raise FoldError(f"folding did not terminate within {max_iter} steps")


def in_domain(group: GeneratorSet, z, tol: float = 1e-12) -> np.ndarray:
    """Whether points lie in the closed Dirichlet domain at 0."""
    la, lb = group.letter_su11()
    z = np.asarray(z, dtype=complex)
    images = mobius(la.reshape((-1,) + (1,) * z.ndim), lb.reshape((-1,) + (1,) * z.ndim), z[None])
    return np.all(np.abs(images) >= np.abs(z)[None] - tol, axis=0)


# ---------------------------------------------------------------------------
# axial elements


def axis_endpoints(g: Isometry) -> tuple[BoundaryPoint, BoundaryPoint]:
    """(repelling, attracting) boundary fixed points of a hyperbolic isometry."""
    if abs(g.trace) <= 2.0 + 1e-12:
        raise GeometryError(f"isometry with |trace| = {abs(g.trace):.6g} is not hyperbolic")
    a, b = g.su11
    # fixed points solve conj(b) z^2 + (conj(a) - a) z - b = 0
    bc = np.conj(b)
    if abs(b) < 1e-15:
        raise GeometryError("a hyperbolic element cannot fix the origin")
    roots = np.roots([bc, np.conj(a) - a, -b])
    roots = roots / np.abs(roots)
    # attracting fixed point has derivative of modulus < 1
    deriv = np.abs(1.0 / (bc * roots + np.conj(a)) ** 2)
    order = np.argsort(-deriv)
    rep, att = roots[order[0]], roots[order[1]]
    return BoundaryPoint.from_complex(rep), BoundaryPoint.from_complex(att)


def translation_length(g: Isometry) -> float:
    return 2.0 * math.acosh(abs(g.trace) / 2.0)
