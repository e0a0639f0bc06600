"""Tabletop world model: workspace, named regions, objects, stacking graph.

The workspace is a 1.0 m x 0.5 m rectangle with the origin at the bottom-left
corner. Objects are blocks (movable cubes in two sizes), bowls (fixed discs)
and zones (fixed squares). Blocks can rest on the table, inside a bowl, or on
top of another block; the support relation forms a forest of chains.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .geometry import Footprint, overlap_fraction

WORKSPACE_W = 1.0
WORKSPACE_H = 0.5

SMALLER_EDGE = 0.04
BIGGER_EDGE = 0.06
BOWL_DIAMETER = 0.12
ZONE_EDGE = 0.12

BOWL_CAPTURE_RADIUS = BOWL_DIAMETER / 2.0
#: A placed block stacks when at least this fraction of its footprint
#: covers the top block of an existing stack.
STACK_CAPTURE_OVERLAP = 0.5
#: Spawn-time separation: table-level footprints may overlap by at most
#: this fraction of the smaller footprint.
SPAWN_MAX_OVERLAP = 0.10
#: Stacked blocks inherit the x,y of their support within this tolerance.
STACK_ALIGN_TOL = 0.005

SCENE_SCHEMA = "scene/1"

TWO_PI = 2.0 * math.pi


class SimError(Exception):
    """Base class for simulator domain errors."""


class WorkspaceError(SimError):
    """A pose or point lies outside the workspace."""


class NoMatchError(SimError):
    """An object reference matches nothing in the scene."""


class AmbiguousRefError(SimError):
    """An object reference matches several objects and carries no ordinal."""

    def __init__(self, count: int):
        super().__init__(f"reference matches {count} objects")
        self.count = count


class Color(str, Enum):
    BLUE = "blue"
    YELLOW = "yellow"
    RED = "red"
    GREEN = "green"
    PINK = "pink"
    GREY = "grey"
    WHITE = "white"
    ORANGE = "orange"
    CYAN = "cyan"
    BROWN = "brown"
    PURPLE = "purple"

    def __str__(self) -> str:  # noqa: D105
        return self.value


#: The seven colors used as task template variables.
TASK_COLORS = tuple(Color)[:7]
#: The full sampler palette.
ALL_COLORS = tuple(Color)

_COLOR_ORDER = {c: i for i, c in enumerate(Color)}


def color_sort_key(c: Color) -> int:
    """Canonical color ordering (palette order), used for all tie-breaks."""
    return _COLOR_ORDER[c]


class SizeClass(str, Enum):
    SMALLER = "smaller"
    BIGGER = "bigger"

    def __str__(self) -> str:  # noqa: D105
        return self.value

    @property
    def edge(self) -> float:
        return SMALLER_EDGE if self is SizeClass.SMALLER else BIGGER_EDGE


class Kind(str, Enum):
    BLOCK = "block"
    BOWL = "bowl"
    ZONE = "zone"

    def __str__(self) -> str:  # noqa: D105
        return self.value


class Region(Enum):
    """3x3 named grid over the workspace: rows top/center/bottom, columns
    left/middle/right. Boundary points resolve toward the top row and the
    left column (lower indices)."""

    TOP_LEFT = ("top", "left")
    TOP_MIDDLE = ("top", "middle")
    TOP_RIGHT = ("top", "right")
    CENTER_LEFT = ("center", "left")
    CENTER_MIDDLE = ("center", "middle")
    CENTER_RIGHT = ("center", "right")
    BOTTOM_LEFT = ("bottom", "left")
    BOTTOM_MIDDLE = ("bottom", "middle")
    BOTTOM_RIGHT = ("bottom", "right")

    @property
    def row(self) -> str:
        return self.value[0]

    @property
    def col(self) -> str:
        return self.value[1]

    @property
    def display(self) -> str:
        return f"{self.row} {self.col}"

    @classmethod
    def from_display(cls, text: str) -> "Region":
        for r in cls:
            if r.display == text:
                return r
        raise ValueError(f"unknown region {text!r}")

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """(x0, y0, x1, y1) of the region rectangle."""
        ci = ("left", "middle", "right").index(self.col)
        ri = ("bottom", "center", "top").index(self.row)
        return (
            ci * WORKSPACE_W / 3.0,
            ri * WORKSPACE_H / 3.0,
            (ci + 1) * WORKSPACE_W / 3.0,
            (ri + 1) * WORKSPACE_H / 3.0,
        )

    @property
    def center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.bounds
        return ((x0 + x1) / 2.0, (y0 + y1) / 2.0)


REGIONS = tuple(Region)


@dataclass(frozen=True)
class Pose:
    """Planar pose; theta is normalized into [0, 2*pi)."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        t = math.fmod(self.theta, TWO_PI)
        if t < 0.0:
            t += TWO_PI
        object.__setattr__(self, "theta", t)

    def distance(self, other: "Pose") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def in_workspace(self) -> bool:
        return 0.0 <= self.x <= WORKSPACE_W and 0.0 <= self.y <= WORKSPACE_H


def clamp_to_workspace(x: float, y: float) -> tuple[float, float]:
    return (min(max(x, 0.0), WORKSPACE_W), min(max(y, 0.0), WORKSPACE_H))


def region_of(p: Pose) -> Region:
    """Grid cell containing (x, y); boundaries resolve top/left."""
    if not p.in_workspace():
        raise WorkspaceError(f"pose ({p.x}, {p.y}) outside workspace")
    col = "left" if p.x <= WORKSPACE_W / 3.0 else ("middle" if p.x <= 2.0 * WORKSPACE_W / 3.0 else "right")
    row = "top" if p.y >= 2.0 * WORKSPACE_H / 3.0 else ("center" if p.y >= WORKSPACE_H / 3.0 else "bottom")
    return Region((row, col))


@dataclass(frozen=True)
class Support:
    """Where an object rests: the table, inside a bowl, or on a block."""

    kind: str  # "table" | "on" | "in_bowl"
    base: int | None = None

    @classmethod
    def table(cls) -> "Support":
        return cls("table")

    @classmethod
    def on(cls, block_id: int) -> "Support":
        return cls("on", block_id)

    @classmethod
    def in_bowl(cls, bowl_id: int) -> "Support":
        return cls("in_bowl", bowl_id)


@dataclass(frozen=True)
class SceneObject:
    id: int
    kind: Kind
    color: Color
    pose: Pose
    size: SizeClass | None = None  # blocks only
    support: Support = field(default_factory=Support.table)

    @property
    def edge(self) -> float:
        """Footprint edge (blocks/zones) or diameter (bowls)."""
        if self.kind is Kind.BLOCK:
            assert self.size is not None
            return self.size.edge
        if self.kind is Kind.BOWL:
            return BOWL_DIAMETER
        return ZONE_EDGE

    def footprint(self) -> Footprint:
        return Footprint(
            cx=self.pose.x,
            cy=self.pose.y,
            w=self.edge,
            h=self.edge,
            theta=0.0 if self.kind is Kind.BOWL else self.pose.theta,
            disc=self.kind is Kind.BOWL,
        )


@dataclass(frozen=True)
class ObjectRef:
    """A descriptor for resolving one object: kind plus optional color, size,
    region and ordinal, or a literal id (wire protocol only), which wins over
    every other field."""

    kind: Kind = Kind.BLOCK
    color: Color | None = None
    size: SizeClass | None = None
    region: Region | None = None
    ordinal: int | None = None  # 1-based, reading order
    id: int | None = None


@dataclass
class Scene:
    """Complete world state. Plain data with value semantics: `copy()` is
    cheap because SceneObject is immutable."""

    objects: dict[int, SceneObject] = field(default_factory=dict)
    clock: float = 0.0

    def copy(self) -> "Scene":
        return Scene(objects=dict(self.objects), clock=self.clock)

    def add(self, obj: SceneObject) -> None:
        if obj.id in self.objects:
            raise ValueError(f"duplicate object id {obj.id}")
        self.objects[obj.id] = obj

    def get(self, obj_id: int) -> SceneObject:
        try:
            return self.objects[obj_id]
        except KeyError:
            raise NoMatchError(f"no object with id {obj_id}") from None

    def update(self, obj_id: int, **changes) -> None:
        self.objects[obj_id] = replace(self.objects[obj_id], **changes)

    def by_kind(self, kind: Kind) -> list[SceneObject]:
        return [o for o in sorted(self.objects.values(), key=lambda o: o.id) if o.kind is kind]

    @property
    def blocks(self) -> list[SceneObject]:
        return self.by_kind(Kind.BLOCK)

    @property
    def bowls(self) -> list[SceneObject]:
        return self.by_kind(Kind.BOWL)

    @property
    def zones(self) -> list[SceneObject]:
        return self.by_kind(Kind.ZONE)

    def child_of(self, block_id: int) -> SceneObject | None:
        """The block resting directly on block_id, if any (at most one)."""
        for o in self.objects.values():
            if o.support.kind == "on" and o.support.base == block_id:
                return o
        return None

    def is_occluded(self, block_id: int) -> bool:
        return self.child_of(block_id) is not None

    def validate(self, spawn: bool = False) -> None:
        """Check scene invariants; raises ValueError on violation."""
        for o in self.objects.values():
            if not o.pose.in_workspace():
                raise ValueError(f"object {o.id} outside workspace")
            if o.kind is not Kind.BLOCK and o.support.kind != "table":
                raise ValueError(f"{o.kind} {o.id} must rest on the table")
            if o.kind is Kind.BLOCK and o.size is None:
                raise ValueError(f"block {o.id} missing size")
        # Support chains: acyclic, bases exist, at most one child per block.
        children: dict[int, int] = {}
        for o in self.objects.values():
            if o.support.kind == "table":
                continue
            base = self.objects.get(o.support.base)
            if base is None:
                raise ValueError(f"object {o.id} supported by missing {o.support.base}")
            if o.support.kind == "on":
                if base.kind is not Kind.BLOCK:
                    raise ValueError(f"object {o.id} stacked on non-block {base.id}")
                if base.id in children:
                    raise ValueError(f"block {base.id} supports two objects")
                children[base.id] = o.id
                if o.pose.distance(base.pose) > STACK_ALIGN_TOL:
                    raise ValueError(f"block {o.id} misaligned with its support {base.id}")
            elif o.support.kind == "in_bowl" and base.kind is not Kind.BOWL:
                raise ValueError(f"object {o.id} in non-bowl {base.id}")
        for o in self.objects.values():
            seen = set()
            cur = o
            while cur.support.kind == "on":
                if cur.id in seen:
                    raise ValueError(f"support cycle through {o.id}")
                seen.add(cur.id)
                cur = self.objects[cur.support.base]
        if spawn:
            table_blocks = [o for o in self.blocks if o.support.kind == "table"]
            for i, a in enumerate(table_blocks):
                for b in table_blocks[i + 1 :]:
                    small, big = (a, b) if a.edge <= b.edge else (b, a)
                    if overlap_fraction(small.footprint(), big.footprint()) > SPAWN_MAX_OVERLAP:
                        raise ValueError(f"spawn overlap between blocks {a.id} and {b.id}")


def reading_order_key(obj: SceneObject) -> tuple[float, float, int]:
    """Top-to-bottom, left-to-right, then id: (y desc, x asc, id asc)."""
    return (-obj.pose.y, obj.pose.x, obj.id)


def matching_objects(scene: Scene, ref: ObjectRef) -> list[SceneObject]:
    """All objects matching the descriptor fields, in reading order."""
    out = []
    for o in scene.objects.values():
        if o.kind is not ref.kind:
            continue
        if ref.color is not None and o.color is not ref.color:
            continue
        if ref.size is not None and o.size is not ref.size:
            continue
        if ref.region is not None and region_of(o.pose) is not ref.region:
            continue
        out.append(o)
    out.sort(key=reading_order_key)
    return out


def resolve_reference(scene: Scene, ref: ObjectRef) -> int:
    """Resolve a reference to a unique object id.

    Raises NoMatchError when nothing matches (or an ordinal exceeds the match
    count) and AmbiguousRefError when several match without an ordinal.
    """
    if ref.id is not None:
        return scene.get(ref.id).id
    matches = matching_objects(scene, ref)
    if not matches:
        raise NoMatchError(f"no {ref.kind} matches the description")
    if ref.ordinal is not None:
        if not 1 <= ref.ordinal <= len(matches):
            raise NoMatchError(f"ordinal {ref.ordinal} exceeds {len(matches)} matches")
        return matches[ref.ordinal - 1].id
    if len(matches) > 1:
        raise AmbiguousRefError(len(matches))
    return matches[0].id


def stack_of(scene: Scene, obj_id: int) -> list[int]:
    """Ids of the stack containing obj_id, base first."""
    cur = scene.get(obj_id)
    while cur.support.kind == "on":
        cur = scene.get(cur.support.base)
    chain = [cur.id]
    child = scene.child_of(cur.id)
    while child is not None:
        chain.append(child.id)
        child = scene.child_of(child.id)
    return chain


def stack_top(scene: Scene, obj_id: int) -> int:
    return stack_of(scene, obj_id)[-1]


def footprint_overlap(a: SceneObject, b: SceneObject) -> float:
    """Fraction of a's footprint area inside b's footprint."""
    return overlap_fraction(a.footprint(), b.footprint())


# ---------------------------------------------------------------------------
# Serialization (versioned, stable field order for byte-exact golden files)
# ---------------------------------------------------------------------------


def object_to_dict(o: SceneObject) -> dict:
    return {
        "id": o.id,
        "kind": o.kind.value,
        "color": o.color.value,
        "size": o.size.value if o.size is not None else None,
        "pose": {"x": o.pose.x, "y": o.pose.y, "theta": o.pose.theta},
        "support": {"kind": o.support.kind, "base": o.support.base},
    }


def object_from_dict(d: dict) -> SceneObject:
    return SceneObject(
        id=d["id"],
        kind=Kind(d["kind"]),
        color=Color(d["color"]),
        size=SizeClass(d["size"]) if d.get("size") else None,
        pose=Pose(d["pose"]["x"], d["pose"]["y"], d["pose"].get("theta", 0.0)),
        support=Support(d["support"]["kind"], d["support"].get("base")),
    )


def scene_to_dict(scene: Scene) -> dict:
    return {
        "schema": SCENE_SCHEMA,
        "clock": scene.clock,
        "objects": [object_to_dict(o) for o in sorted(scene.objects.values(), key=lambda o: o.id)],
    }


def scene_from_dict(d: dict) -> Scene:
    if d.get("schema") != SCENE_SCHEMA:
        raise ValueError(f"unsupported scene schema {d.get('schema')!r}")
    scene = Scene(clock=d.get("clock", 0.0))
    for od in d["objects"]:
        scene.add(object_from_dict(od))
    return scene


def scene_to_json(scene: Scene) -> str:
    return json.dumps(scene_to_dict(scene), separators=(",", ":"))


def scene_from_json(text: str) -> Scene:
    return scene_from_dict(json.loads(text))
