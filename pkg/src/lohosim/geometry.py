"""Planar footprint geometry: rectangles, discs, and exact overlap areas.

Everything on the table is a 2D footprint: blocks and zones are (possibly
rotated) squares, bowls are discs. Overlap fractions feed the zone-match
predicate and the stacking capture rule, so they must be exact and
deterministic; shapely does the general polygon work, with a pure-Python
fast path for the axis-aligned case that dominates at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from shapely.geometry import Point, Polygon

# Segments per quadrant when polygonising a disc; area error ~1e-5 relative.
_DISC_QUAD_SEGS = 64


@dataclass(frozen=True)
class Footprint:
    """A rectangle (w x h, rotated by theta) or a disc (radius, w == h == 2r)."""

    cx: float
    cy: float
    w: float
    h: float
    theta: float = 0.0
    disc: bool = False

    @property
    def area(self) -> float:
        if self.disc:
            return math.pi * (self.w / 2.0) ** 2
        return self.w * self.h

    @property
    def bound_radius(self) -> float:
        if self.disc:
            return self.w / 2.0
        return math.hypot(self.w, self.h) / 2.0

    def corners(self) -> list[tuple[float, float]]:
        """Rectangle corners, counter-clockwise."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        hw, hh = self.w / 2.0, self.h / 2.0
        out = []
        for dx, dy in ((-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)):
            out.append((self.cx + dx * c - dy * s, self.cy + dx * s + dy * c))
        return out

    def to_shapely(self) -> Polygon:
        if self.disc:
            return Point(self.cx, self.cy).buffer(self.w / 2.0, quad_segs=_DISC_QUAD_SEGS)
        return Polygon(self.corners())

    def contains_point(self, x: float, y: float) -> bool:
        dx, dy = x - self.cx, y - self.cy
        if self.disc:
            return math.hypot(dx, dy) <= self.w / 2.0
        c, s = math.cos(self.theta), math.sin(self.theta)
        u = dx * c + dy * s
        v = -dx * s + dy * c
        return abs(u) <= self.w / 2.0 and abs(v) <= self.h / 2.0


def _aligned_extents(fp: Footprint) -> tuple[float, float] | None:
    """(w, h) if the rectangle is axis-aligned at its rotation, else None."""
    q, r = divmod(fp.theta, math.pi / 2.0)
    if r > 1e-12 and (math.pi / 2.0 - r) > 1e-12:
        return None
    quarter_turns = round(q + (0 if r <= 1e-12 else 1))
    if quarter_turns % 2:
        return fp.h, fp.w
    return fp.w, fp.h


def _rect_axes(fp: Footprint) -> tuple[tuple[float, float], tuple[float, float]]:
    c, s = math.cos(fp.theta), math.sin(fp.theta)
    return (c, s), (-s, c)


def _project_radius(fp: Footprint, ax: tuple[float, float]) -> float:
    """Half-extent of a rectangle projected onto a unit axis."""
    (ux, uy), (vx, vy) = _rect_axes(fp)
    return (
        abs((ux * ax[0] + uy * ax[1])) * fp.w / 2.0
        + abs((vx * ax[0] + vy * ax[1])) * fp.h / 2.0
    )


def footprints_disjoint(a: Footprint, b: Footprint) -> bool:
    """Exact zero-intersection test without constructing shapes."""
    dx, dy = b.cx - a.cx, b.cy - a.cy
    d = math.hypot(dx, dy)
    if d >= a.bound_radius + b.bound_radius:
        return True
    if a.disc and b.disc:
        return d >= (a.w + b.w) / 2.0
    if a.disc or b.disc:
        disc, rect = (a, b) if a.disc else (b, a)
        c, s = math.cos(rect.theta), math.sin(rect.theta)
        rx, ry = disc.cx - rect.cx, disc.cy - rect.cy
        u, v = rx * c + ry * s, -rx * s + ry * c
        du = max(abs(u) - rect.w / 2.0, 0.0)
        dv = max(abs(v) - rect.h / 2.0, 0.0)
        return math.hypot(du, dv) >= disc.w / 2.0
    # Rectangle pair: separating-axis test over both frames.
    for fp in (a, b):
        for ax in _rect_axes(fp):
            centers = dx * ax[0] + dy * ax[1]
            if abs(centers) >= _project_radius(a, ax) + _project_radius(b, ax):
                return True
    return False


def _lens_area(r1: float, r2: float, d: float) -> float:
    """Intersection area of two discs at center distance d."""
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        r = min(r1, r2)
        return math.pi * r * r
    a1 = r1 * r1 * math.acos((d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1))
    a2 = r2 * r2 * math.acos((d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2))
    a3 = 0.5 * math.sqrt(
        (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    )
    return a1 + a2 - a3


def intersection_area(a: Footprint, b: Footprint) -> float:
    """Exact area of the footprint intersection."""
    if footprints_disjoint(a, b):
        return 0.0
    if a.disc and b.disc:
        return _lens_area(a.w / 2.0, b.w / 2.0, math.hypot(a.cx - b.cx, a.cy - b.cy))
    if not a.disc and not b.disc:
        ea, eb = _aligned_extents(a), _aligned_extents(b)
        if ea is not None and eb is not None:
            ix = min(a.cx + ea[0] / 2, b.cx + eb[0] / 2) - max(a.cx - ea[0] / 2, b.cx - eb[0] / 2)
            iy = min(a.cy + ea[1] / 2, b.cy + eb[1] / 2) - max(a.cy - ea[1] / 2, b.cy - eb[1] / 2)
            if ix <= 0.0 or iy <= 0.0:
                return 0.0
            return ix * iy
    return a.to_shapely().intersection(b.to_shapely()).area


def overlap_fraction(a: Footprint, b: Footprint) -> float:
    """Fraction of a's area covered by b, in [0, 1]."""
    frac = intersection_area(a, b) / a.area
    return min(1.0, max(0.0, frac))
