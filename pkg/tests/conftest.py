"""Shared scene builders and the Monte-Carlo rasterization oracle.

The rasterization oracle is deliberately independent of the analytic
geometry path: it samples points in one footprint and tests membership in
the other with plain numpy, so it can arbitrate the analytic results.
"""

from __future__ import annotations

import math

import numpy as np
import pytest

from lohosim.geometry import Footprint
from lohosim.world import Color, Kind, Pose, Scene, SceneObject, SizeClass, Support


def make_block(obj_id: int, color: Color, x: float, y: float,
               size: SizeClass = SizeClass.SMALLER, theta: float = 0.0,
               support: Support | None = None) -> SceneObject:
    return SceneObject(
        id=obj_id, kind=Kind.BLOCK, color=color, size=size,
        pose=Pose(x, y, theta), support=support or Support.table(),
    )


def make_bowl(obj_id: int, color: Color, x: float, y: float) -> SceneObject:
    return SceneObject(id=obj_id, kind=Kind.BOWL, color=color, pose=Pose(x, y))


def make_zone(obj_id: int, color: Color, x: float, y: float) -> SceneObject:
    return SceneObject(id=obj_id, kind=Kind.ZONE, color=color, pose=Pose(x, y))


def make_scene(*objects: SceneObject) -> Scene:
    scene = Scene()
    for o in objects:
        scene.add(o)
    return scene


def mc_overlap(a: Footprint, b: Footprint, n: int = 1_000_000, seed: int = 0) -> float:
    """Fraction of a's area covered by b, by uniform point sampling in a."""
    rng = np.random.default_rng(seed)
    if a.disc:
        r = (a.w / 2.0) * np.sqrt(rng.random(n))
        ang = rng.random(n) * 2.0 * np.pi
        xs = a.cx + r * np.cos(ang)
        ys = a.cy + r * np.sin(ang)
    else:
        u = rng.uniform(-a.w / 2.0, a.w / 2.0, n)
        v = rng.uniform(-a.h / 2.0, a.h / 2.0, n)
        c, s = math.cos(a.theta), math.sin(a.theta)
        xs = a.cx + u * c - v * s
        ys = a.cy + u * s + v * c
    dx, dy = xs - b.cx, ys - b.cy
    if b.disc:
        inside = dx * dx + dy * dy <= (b.w / 2.0) ** 2
    else:
        c, s = math.cos(b.theta), math.sin(b.theta)
        ub = dx * c + dy * s
        vb = -dx * s + dy * c
        inside = (np.abs(ub) <= b.w / 2.0) & (np.abs(vb) <= b.h / 2.0)
    return float(inside.mean())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
