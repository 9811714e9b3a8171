"""Cone and shadow neighbourhoods on the boundary circle, and measure queries on them.

In constant curvature both kinds of neighbourhood are arcs. Visual angles at
a point other than the origin are not boundary angles, so arcs seen from x
are computed in the chart centred at x and mapped back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    Arc,
    BoundaryPoint,
    DiskPoint,
    GeometryError,
    from_origin,
    shadow_angle,
    to_origin,
)
from .gibbs import PattersonMeasure


@dataclass(frozen=True)
class ArcQueryResult:
    arc: Arc
    atom_count: int
    mass: float


def cone_arc(x: DiskPoint, a: float, xi: BoundaryPoint) -> Arc:
    """``{eta : angle_x(xi, eta) < a}`` as an arc of boundary angles."""
    if not (0.0 < a <= math.pi):
        raise GeometryError("cone aperture must lie in (0, pi]")
    w = to_origin(x.z, xi.z)
    phi = float(np.angle(w))
    if a >= math.pi:
        anti = from_origin(x.z, -w / abs(w))
        return Arc(BoundaryPoint(float(np.angle(-anti))), math.pi)
    lo = float(np.angle(from_origin(x.z, np.exp(1j * (phi - a)))))
    hi = float(np.angle(from_origin(x.z, np.exp(1j * (phi + a)))))
    # counter-clockwise length from lo to hi; orientation is preserved by the chart change
    span = (hi - lo) % (2.0 * math.pi)
    return Arc(BoundaryPoint(lo + span / 2.0), span / 2.0)


def shadow_arc(x: DiskPoint, t: float, xi: BoundaryPoint) -> Arc:
    """Shadow ``B_{x,t}(xi)``: the cone of visual half-angle ``shadow_angle(t)``."""
    return cone_arc(x, shadow_angle(t), xi)


def measure_arc(mu: PattersonMeasure, arc: Arc) -> ArcQueryResult:
    count, mass = mu.arc_mass(arc)
    return ArcQueryResult(arc, count, mass)
