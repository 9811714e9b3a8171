"""Orbit enumeration, the orbit table, and its on-disk cache.

Enumeration walks the Cayley graph by left multiplication ``g -> s g``.
Because the sides of the Dirichlet domain at 0 are exactly the letter
bisectors, every element ``g`` is joined to the identity by a chain of
letter steps along which ``d(0, g 0)`` strictly decreases (fold ``g 0``
back into the domain). Expanding only nodes with

    d(0, g 0) <= R + d(0, x) + d(0, y) + prune_margin

thus finds every ``g`` with ``d(x, g y) <= R`` already at ``prune_margin = 0``.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import (
    BoundaryPoint,
    DiskPoint,
    TWO_PI,
    disk_dist,
    from_origin,
    mobius,
    radial_dist,
    to_origin,
)
from .groups import (
    FREE_SCHOTTKY,
    GeneratorSet,
    Word,
    format_word,
    parse_word,
    word_key,
)

CSV_HEADER = ["word", "distance", "proj_angle", "point_re", "point_im", "pot_integral"]
DEFAULT_MAX_NODES = 5_000_000


class OrbitBudgetError(MemoryError):
    def __init__(self, message: str, partial_radius: float):
        super().__init__(message)
        self.partial_radius = partial_radius


class CacheError(RuntimeError):
    pass


class CacheIntegrityError(CacheError):
    pass


@dataclass(frozen=True)
class OrbitPoint:
    word: Word
    point: DiskPoint
    distance: float
    potential_integral: float
    projection: BoundaryPoint | None


class _PointIndex:
    """Exact-match index for orbit points of the origin.

    Distinct elements move 0 to points at least a systole apart, far above
    the quantum; points computed along different words agree to ~1e-15.
    Keys sit on a 1e-10 grid and values within 1e-3 quanta of a cell edge
    are also looked up in the neighbouring cell.
    """

    QUANTUM = 1e-10
    EDGE = 1e-3

    def __init__(self):
        self._cells: dict[tuple[int, int], int] = {}

    def _cells_for(self, z: complex):
        fx, fy = z.real / self.QUANTUM, z.imag / self.QUANTUM
        kx, ky = round(fx), round(fy)
        xs, ys = [kx], [ky]
        rx, ry = fx - kx, fy - ky
        if abs(abs(rx) - 0.5) < self.EDGE:
            xs.append(kx + (1 if rx > 0 else -1))
        if abs(abs(ry) - 0.5) < self.EDGE:
            ys.append(ky + (1 if ry > 0 else -1))
        return (kx, ky), [(i, j) for i in xs for j in ys]

    def find(self, z: complex) -> int | None:
        _, cells = self._cells_for(z)
        for c in cells:
            hit = self._cells.get(c)
            if hit is not None:
                return hit
        return None

    def add(self, z: complex, index: int) -> None:
        own, _ = self._cells_for(z)
        self._cells[own] = index


@dataclass(frozen=True, eq=False)
class OrbitTable:
    """Orbit points ``g y`` within ``radius`` of ``x``, stored column-wise.

    ``complete_radius`` is the radius around ``x`` within which the table is
    known to contain every orbit point; it equals ``radius`` for a fresh
    enumeration and shrinks when the table is rebased to another basepoint.
    """

    x: DiskPoint
    y: DiskPoint
    radius: float
    words: tuple[Word, ...]
    points: np.ndarray
    distances: np.ndarray
    projections: np.ndarray
    complete_radius: float
    pot_integrals: np.ndarray | None = None
    potential_hash: str | None = None
    group_info: dict = field(default_factory=dict)
    prune_margin: float = 0.0
    elements: tuple[np.ndarray, np.ndarray] | None = None

    def __len__(self) -> int:
        return len(self.words)

    @property
    def annulus_index(self) -> np.ndarray:
        """``n`` with ``n - 1 < d <= n`` for each point."""
        return np.ceil(self.distances - 1e-12).astype(int)

    @property
    def annuli(self) -> dict[int, list[OrbitPoint]]:
        out: dict[int, list[OrbitPoint]] = {}
        for n, op in zip(self.annulus_index, self):
            out.setdefault(int(n), []).append(op)
        return out

    def annulus_counts(self) -> dict[int, int]:
        ns, counts = np.unique(self.annulus_index, return_counts=True)
        return {int(n): int(c) for n, c in zip(ns, counts)}

    def __iter__(self):
        pots = self.pot_integrals
        for i, w in enumerate(self.words):
            proj = self.projections[i]
            yield OrbitPoint(
                w,
                DiskPoint.from_complex(self.points[i]),
                float(self.distances[i]),
                float("nan") if pots is None else float(pots[i]),
                None if math.isnan(proj) else BoundaryPoint(float(proj)),
            )

    def rebased(self, x: DiskPoint) -> "OrbitTable":
        """Same orbit points seen from a new basepoint; potential integrals are dropped."""
        d = disk_dist(x.z, self.points)
        proj = _projections(x.z, self.points, d)
        shift = float(disk_dist(x.z, self.x.z))
        return replace(
            self,
            x=x,
            distances=d,
            projections=proj,
            complete_radius=max(0.0, self.complete_radius - shift),
            pot_integrals=None,
            potential_hash=None,
        )

    def with_potential(self, potential, h: float = 0.01) -> "OrbitTable":
        """Fill ``pot_integrals`` with the line integrals of ``potential`` from ``x``."""
        vals = potential.line_integrals(self.x.z, self.points, h)
        return replace(self, pot_integrals=vals, potential_hash=potential.hash())

    def restricted(self, radius: float) -> "OrbitTable":
        keep = self.distances <= radius
        return self.subset(np.nonzero(keep)[0], radius=radius)

    def subset(self, idx, radius: float | None = None) -> "OrbitTable":
        idx = np.asarray(idx, dtype=int)
        el = None
        if self.elements is not None:
            el = (self.elements[0][idx], self.elements[1][idx])
        r = self.radius if radius is None else radius
        return replace(
            self,
            radius=r,
            words=tuple(self.words[i] for i in idx),
            points=self.points[idx],
            distances=self.distances[idx],
            projections=self.projections[idx],
            complete_radius=min(self.complete_radius, r),
            pot_integrals=None if self.pot_integrals is None else self.pot_integrals[idx],
            elements=el,
        )

    def index_of_point(self):
        """Map from an orbit point (as complex) to its row, tolerant to rounding."""
        ix = _PointIndex()
        for i, z in enumerate(self.points):
            ix.add(complex(z), i)
        return ix


def _projections(x: complex, points: np.ndarray, d: np.ndarray) -> np.ndarray:
    w = to_origin(x, points)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = w / np.abs(w)
        ang = np.mod(np.angle(from_origin(x, u)), TWO_PI)
    ang[d < 1e-12] = np.nan
    return ang


def enumerate_orbit(
    group: GeneratorSet,
    x: DiskPoint,
    y: DiskPoint,
    radius: float,
    prune_margin: float = 0.0,
    max_nodes: int = DEFAULT_MAX_NODES,
) -> OrbitTable:
    """All orbit points ``g y`` with ``d(x, g y) <= radius``.

    Raises :class:`OrbitBudgetError` (carrying the radius completed so far)
    when more than ``max_nodes`` group elements would have to be visited.
    """
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    free = group.kind == FREE_SCHOTTKY
    threshold = radius + float(radial_dist(x.z)) + float(radial_dist(y.z)) + prune_margin
    la, lb = group.letter_su11()
    letters = np.array(group.letters)

    words: list[Word] = [()]
    el_a = [np.array([1.0 + 0j])]
    el_b = [np.array([0j])]
    frontier_words: list[Word] = [()]
    fa, fb = el_a[0], el_b[0]
    index = None if free else _PointIndex()
    if index is not None:
        index.add(0j, 0)
    total = 1

    while frontier_words:
        # candidates s * g for every letter s and frontier element g
        na = la[:, None] * fa[None, :] + lb[:, None] * np.conj(fb)[None, :]
        nb = la[:, None] * fb[None, :] + lb[:, None] * np.conj(fa)[None, :]
        d0 = 2.0 * np.arccosh(np.maximum(np.abs(na), 1.0))
        li, fi = np.nonzero(d0 <= threshold)
        cand = []
        for l_idx, f_idx in zip(li.tolist(), fi.tolist()):
            s = int(letters[l_idx])
            w = frontier_words[f_idx]
            if w and w[0] == -s:
                continue
            cand.append(((s,) + w, l_idx, f_idx))
        cand.sort(key=lambda c: word_key(c[0]))

        new_words: list[Word] = []
        keep_l, keep_f = [], []
        for w, l_idx, f_idx in cand:
            if index is not None:
                z0 = complex(nb[l_idx, f_idx] / np.conj(na[l_idx, f_idx]))
                if index.find(z0) is not None:
                    continue
                index.add(z0, total + len(new_words))
            new_words.append(w)
            keep_l.append(l_idx)
            keep_f.append(f_idx)
        if total + len(new_words) > max_nodes:
            partial = float(np.min(d0[li, fi])) - (threshold - radius) if len(li) else radius
            raise OrbitBudgetError(
                f"orbit enumeration needs more than {max_nodes} elements "
                f"(complete only up to radius ~{partial:.2f})",
                partial,
            )
        if not new_words:
            break
        fa = na[keep_l, keep_f]
        fb = nb[keep_l, keep_f]
        el_a.append(fa)
        el_b.append(fb)
        words.extend(new_words)
        frontier_words = new_words
        total += len(new_words)

    A = np.concatenate(el_a)
    B = np.concatenate(el_b)
    pts = mobius(A, B, y.z)
    d = disk_dist(x.z, pts)
    keep = np.nonzero(d <= radius)[0]
    order = sorted(keep.tolist(), key=lambda i: word_key(words[i]))
    order = np.array(order, dtype=int)
    pts = pts[order]
    d = d[order]
    return OrbitTable(
        x=x,
        y=y,
        radius=float(radius),
        words=tuple(words[i] for i in order),
        points=pts,
        distances=d,
        projections=_projections(x.z, pts, d),
        complete_radius=float(radius),
        group_info=group.describe(),
        prune_margin=float(prune_margin),
        elements=(A[order], B[order]),
    )


def exhaustive_orbit(group: GeneratorSet, x: DiskPoint, y: DiskPoint, radius: float, depth: int) -> set:
    """Brute-force orbit within ``radius`` over all reduced words up to ``depth``.

    Returns the set of point keys (rounded to 1e-8) for comparison with
    :func:`enumerate_orbit`.
    """
    la, lb = group.letter_su11()
    letters = group.letters
    found = set()
    layer = [((), 1.0 + 0j, 0j)]
    for k in range(depth + 1):
        nxt = []
        for w, a, b in layer:
            p = mobius(a, b, y.z)
            if disk_dist(x.z, p) <= radius:
                found.add((round(p.real, 8), round(p.imag, 8)))
            if k == depth:
                continue
            for j, s in enumerate(letters):
                if w and w[0] == -s:
                    continue
                nxt.append(((s,) + w, la[j] * a + lb[j] * np.conj(b), la[j] * b + lb[j] * np.conj(a)))
        layer = nxt
    return found


# ---------------------------------------------------------------------------
# cache


def cache_root() -> Path:
    return Path(os.environ.get("GIBBSLAB_CACHE_DIR", Path.home() / ".cache" / "gibbslab"))


def _fmt(v: float) -> str:
    return "nan" if v != v else repr(float(v))


def table_to_csv(table: OrbitTable) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(CSV_HEADER)
    pots = table.pot_integrals
    for i, w in enumerate(table.words):
        z = table.points[i]
        wr.writerow([
            format_word(w),
            _fmt(table.distances[i]),
            _fmt(table.projections[i]),
            _fmt(z.real),
            _fmt(z.imag),
            _fmt(float("nan") if pots is None else pots[i]),
        ])
    return buf.getvalue()


def cache_key(meta: dict) -> str:
    """Hash of the parameters that determine a table (group, basepoints, radius, potential)."""
    blob = json.dumps(
        {k: meta[k] for k in ("group", "x", "y", "radius", "prune_margin", "potential_hash", "h")},
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def table_metadata(table: OrbitTable, h: float | None = None) -> dict:
    return {
        "group": table.group_info,
        "x": [table.x.re, table.x.im],
        "y": [table.y.re, table.y.im],
        "radius": table.radius,
        "prune_margin": table.prune_margin,
        "potential_hash": table.potential_hash,
        "h": h,
    }


def write_cache(table: OrbitTable, directory: Path, h: float | None = None) -> tuple[Path, bool]:
    """Write ``<key>.csv`` plus a ``<key>.json`` sidecar.

    Returns ``(csv_path, hit)``; ``hit`` is True when an identical entry was
    already present, in which case nothing is written.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    # JSON round trip so tuples and lists compare equal against the sidecar
    meta = json.loads(json.dumps(table_metadata(table, h)))
    key = cache_key(meta)
    csv_path = directory / f"{key}.csv"
    meta_path = directory / f"{key}.json"
    if meta_path.exists() and csv_path.exists():
        old = json.loads(meta_path.read_text())
        if {k: old.get(k) for k in meta} != meta:
            raise CacheError(f"cache key {key} already holds a table with different parameters")
        _verify(csv_path, old)
        return csv_path, True
    text = table_to_csv(table)
    data = text.encode()
    full = dict(meta)
    full.update(
        rows=len(table),
        complete_radius=table.complete_radius,
        sha256=hashlib.sha256(data).hexdigest(),
        columns=CSV_HEADER,
    )
    tmp = csv_path.with_suffix(".csv.tmp")
    tmp.write_bytes(data)
    tmp.replace(csv_path)
    meta_path.write_text(json.dumps(full, indent=2, sort_keys=True) + "\n")
    return csv_path, False


def _verify(csv_path: Path, meta: dict) -> bytes:
    data = csv_path.read_bytes()
    digest = hashlib.sha256(data).hexdigest()
    if digest != meta.get("sha256"):
        raise CacheIntegrityError(f"checksum mismatch for {csv_path.name}: cache is corrupted")
    return data


def read_cache(csv_path: Path) -> OrbitTable:
    csv_path = Path(csv_path)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    data = _verify(csv_path, meta)
    rows = list(csv.reader(io.StringIO(data.decode())))
    if rows[0] != CSV_HEADER:
        raise CacheIntegrityError(f"unexpected header in {csv_path.name}")
    body = rows[1:]
    if len(body) != meta["rows"]:
        raise CacheIntegrityError(f"row count mismatch in {csv_path.name}")
    words = tuple(parse_word(r[0]) for r in body)
    arr = np.array([[float(v) for v in r[1:]] for r in body]).reshape(-1, 5)
    pots = arr[:, 4]
    return OrbitTable(
        x=DiskPoint(*meta["x"]),
        y=DiskPoint(*meta["y"]),
        radius=meta["radius"],
        words=words,
        points=arr[:, 2] + 1j * arr[:, 3],
        distances=arr[:, 0],
        projections=arr[:, 1],
        complete_radius=meta["complete_radius"],
        pot_integrals=None if np.all(np.isnan(pots)) else pots,
        potential_hash=meta["potential_hash"],
        group_info=meta["group"],
        prune_margin=meta["prune_margin"],
    )
