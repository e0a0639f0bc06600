"""The language-conditioned pick-and-place motion primitive.

An action names one block to pick and one place target. Execution resolves
both references, rolls transport drops, applies placement noise, then updates
the support graph by capture rules: release within 0.06 m of a bowl center
lands in the bowl; release covering at least half of a stack top stacks onto
it (snapping x,y to the support); anything else rests on the table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from . import perturb, world
from .geometry import Footprint
from .perturb import PerturbConfig, StepStreams
from .world import (
    AmbiguousRefError,
    Kind,
    NoMatchError,
    ObjectRef,
    Pose,
    Region,
    Scene,
    Support,
    clamp_to_workspace,
    resolve_reference,
    stack_of,
)

#: Relative placements sit this far from the referent's center.
RELATIVE_OFFSET = 0.10
#: Pitch of the collision-avoiding placement grid used for region targets.
REGION_GRID_PITCH = 0.08
#: Placement grid points keep this margin from region borders.
REGION_GRID_INSET = 0.03
#: Candidate offsets (from the zone center) for staging several blocks in one
#: zone without triggering the stacking capture; all keep a small block fully
#: inside the zone.
ZONE_SPOT_OFFSETS = (
    (0.0, 0.0),
    (0.0275, 0.0275),
    (-0.0275, 0.0275),
    (0.0275, -0.0275),
    (-0.0275, -0.0275),
    (0.0275, 0.0),
    (-0.0275, 0.0),
    (0.0, 0.0275),
    (0.0, -0.0275),
)
#: A staging spot counts as occupied when an existing block covers this much
#: of a candidate footprint placed there.
SPOT_OCCUPIED_OVERLAP = 0.30

RELATIONS = ("left_of", "right_of", "above", "below")


@dataclass(frozen=True)
class PlaceTarget:
    """One of: on a block, relative to a block, a named region, in a bowl,
    in a zone, or a literal table point (internal; drops and topples)."""

    kind: str  # "on_object" | "relative" | "region" | "in_bowl" | "in_zone" | "table_point"
    ref: ObjectRef | None = None
    relation: str | None = None
    region: Region | None = None
    point: Pose | None = None

    @classmethod
    def on_object(cls, ref: ObjectRef) -> "PlaceTarget":
        return cls("on_object", ref=ref)

    @classmethod
    def relative(cls, ref: ObjectRef, relation: str) -> "PlaceTarget":
        if relation not in RELATIONS:
            raise ValueError(f"unknown relation {relation!r}")
        return cls("relative", ref=ref, relation=relation)

    @classmethod
    def in_region(cls, region: Region) -> "PlaceTarget":
        return cls("region", region=region)

    @classmethod
    def in_bowl(cls, ref: ObjectRef) -> "PlaceTarget":
        return cls("in_bowl", ref=ref)

    @classmethod
    def in_zone(cls, ref: ObjectRef) -> "PlaceTarget":
        return cls("in_zone", ref=ref)

    @classmethod
    def table_point(cls, point: Pose) -> "PlaceTarget":
        return cls("table_point", point=point)


@dataclass(frozen=True)
class Action:
    """Pick one block, release it at the place target."""

    pick: ObjectRef
    place: PlaceTarget

    def __post_init__(self):
        if self.pick.kind is not Kind.BLOCK:
            raise ValueError("only blocks can be picked")


@dataclass(frozen=True)
class ExecutionOutcome:
    status: str  # "success" | "pick_failed" | "place_failed" | "dropped" | "toppled"
    reason: str | None = None  # no_match | ambiguous | occluded
    detail: int | None = None  # match count for ambiguous failures
    at: Pose | None = None  # landing pose for dropped/toppled
    elapsed_seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "success"

    @property
    def moved(self) -> bool:
        """Whether the block left the gripper somewhere (scene mutated)."""
        return self.status in ("success", "dropped", "toppled")

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "reason": self.reason,
            "detail": self.detail,
            "at": None if self.at is None else {"x": self.at.x, "y": self.at.y, "theta": self.at.theta},
            "elapsed_seconds": self.elapsed_seconds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExecutionOutcome":
        at = d.get("at")
        return cls(
            status=d["status"],
            reason=d.get("reason"),
            detail=d.get("detail"),
            at=None if at is None else Pose(at["x"], at["y"], at.get("theta", 0.0)),
            elapsed_seconds=d.get("elapsed_seconds", 0.0),
        )


def _spot_occupied(scene: Scene, x: float, y: float, edge: float, ignore: int | None) -> bool:
    cand = Footprint(cx=x, cy=y, w=edge, h=edge)
    for o in scene.objects.values():
        if o.id == ignore or o.kind is Kind.ZONE:
            continue  # zones are flat; only blocks and bowls capture a landing
        if world.overlap_fraction(cand, o.footprint()) >= SPOT_OCCUPIED_OVERLAP:
            return True
    return False


def _region_spot(scene: Scene, region: Region, ignore: int | None) -> Pose:
    """Region center, or the nearest free point of the 0.08 m placement grid."""
    cx, cy = region.center
    x0, y0, x1, y1 = region.bounds
    edge = world.BIGGER_EDGE
    if not _spot_occupied(scene, cx, cy, edge, ignore):
        return Pose(cx, cy)
    candidates = []
    nx = int((x1 - x0 - 2 * REGION_GRID_INSET) / REGION_GRID_PITCH) + 1
    ny = int((y1 - y0 - 2 * REGION_GRID_INSET) / REGION_GRID_PITCH) + 1
    for i in range(nx):
        for j in range(ny):
            gx = x0 + REGION_GRID_INSET + i * REGION_GRID_PITCH
            gy = y0 + REGION_GRID_INSET + j * REGION_GRID_PITCH
            if gx > x1 - REGION_GRID_INSET or gy > y1 - REGION_GRID_INSET:
                continue
            candidates.append((math.hypot(gx - cx, gy - cy), gx, gy))
    candidates.sort()
    for _, gx, gy in candidates:
        if not _spot_occupied(scene, gx, gy, edge, ignore):
            return Pose(gx, gy)
    # Saturated region: fall back to its center and accept the overlap.
    return Pose(cx, cy)


def _zone_spot(scene: Scene, zone: world.SceneObject, ignore: int | None) -> Pose:
    edge = world.SMALLER_EDGE
    for dx, dy in ZONE_SPOT_OFFSETS:
        x, y = zone.pose.x + dx, zone.pose.y + dy
        if not _spot_occupied(scene, x, y, edge, ignore):
            return Pose(x, y)
    return Pose(zone.pose.x, zone.pose.y)


def oracle_place_pose(scene: Scene, target: PlaceTarget, ignore: int | None = None) -> Pose:
    """Noiseless goal pose for a place target (shared by execution and the
    scripted planners).

    References resolve against the full scene -- the scene the planner
    described -- so ordinals keep their meaning while the picked block is in
    flight; `ignore` (the picked block) is excluded only from geometry: stack
    tops and staging-spot occupancy. A reference resolving to the ignored
    block itself is a no-match (a block cannot be placed relative to itself).
    """

    def resolve(ref: ObjectRef) -> int:
        rid = resolve_reference(scene, ref)
        if ignore is not None and rid == ignore:
            raise NoMatchError("place target is the picked block itself")
        return rid

    work = scene
    if ignore is not None and ignore in scene.objects:
        work = scene.copy()
        del work.objects[ignore]
    if target.kind == "table_point":
        if not target.point.in_workspace():
            raise world.WorkspaceError("table point outside workspace")
        return target.point
    if target.kind == "region":
        return _region_spot(work, target.region, ignore=None)
    if target.kind == "on_object":
        base_id = resolve(target.ref)
        base = work.get(base_id)
        if base.kind is not Kind.BLOCK:
            raise NoMatchError("can only stack on blocks")
        top = work.get(stack_of(work, base_id)[-1])
        return Pose(top.pose.x, top.pose.y, top.pose.theta)
    if target.kind == "relative":
        anchor = work.get(resolve(target.ref))
        dx, dy = {
            "left_of": (-RELATIVE_OFFSET, 0.0),
            "right_of": (RELATIVE_OFFSET, 0.0),
            "above": (0.0, RELATIVE_OFFSET),
            "below": (0.0, -RELATIVE_OFFSET),
        }[target.relation]
        x, y = clamp_to_workspace(anchor.pose.x + dx, anchor.pose.y + dy)
        return Pose(x, y)
    if target.kind == "in_bowl":
        bowl = work.get(resolve(target.ref))
        if bowl.kind is not Kind.BOWL:
            raise NoMatchError("place target is not a bowl")
        return Pose(bowl.pose.x, bowl.pose.y)
    if target.kind == "in_zone":
        zone = work.get(resolve(target.ref))
        if zone.kind is not Kind.ZONE:
            raise NoMatchError("place target is not a zone")
        return _zone_spot(work, zone, ignore=None)
    raise ValueError(f"unknown place target kind {target.kind!r}")


def _land(scene: Scene, block_id: int, pose: Pose, cfg: PerturbConfig, streams: StepStreams) -> tuple[Pose, str]:
    """Apply capture rules at a landing pose; returns (final pose, support kind).

    Mutates the scene: sets the block's pose and support, and rolls topple for
    stack captures. Returns the support kind actually applied ("in_bowl",
    "on", "table", or "toppled")."""
    block = scene.get(block_id)
    # Bowl capture wins over stacking.
    for bowl in scene.bowls:
        if math.hypot(pose.x - bowl.pose.x, pose.y - bowl.pose.y) <= world.BOWL_CAPTURE_RADIUS:
            scene.update(block_id, pose=pose, support=Support.in_bowl(bowl.id))
            return pose, "in_bowl"
    landed = replace(block, pose=pose)
    for other in scene.blocks:
        if other.id == block_id or scene.is_occluded(other.id):
            continue
        if world.footprint_overlap(landed, other) >= world.STACK_CAPTURE_OVERLAP:
            snapped = Pose(other.pose.x, other.pose.y, pose.theta)
            scene.update(block_id, pose=snapped, support=Support.on(other.id))
            height = len(stack_of(scene, block_id))
            topple = perturb.roll_topple(height, cfg, streams.channel("topple"))
            if topple.toppled:
                base = scene.get(stack_of(scene, block_id)[0])
                fx, fy = clamp_to_workspace(
                    base.pose.x + topple.offset[0], base.pose.y + topple.offset[1]
                )
                final = Pose(fx, fy, pose.theta)
                scene.update(block_id, pose=final, support=Support.table())
                return final, "toppled"
            return snapped, "on"
    scene.update(block_id, pose=pose, support=Support.table())
    return pose, "table"


def execute_pick_place(
    scene: Scene, action: Action, cfg: PerturbConfig, streams: StepStreams
) -> tuple[Scene, ExecutionOutcome]:
    """Execute one pick-and-place on a copy of the scene.

    Reference failures come back as PickFailed/PlaceFailed outcomes with the
    scene unchanged; drops and topples still mutate the scene (the block lands
    somewhere). The scene clock advances by the elapsed transport time.
    """
    try:
        block_id = resolve_reference(scene, action.pick)
    except AmbiguousRefError as e:
        return scene, ExecutionOutcome("pick_failed", reason="ambiguous", detail=e.count)
    except NoMatchError:
        return scene, ExecutionOutcome("pick_failed", reason="no_match")
    block = scene.get(block_id)
    if block.kind is not Kind.BLOCK:
        return scene, ExecutionOutcome("pick_failed", reason="no_match")
    if scene.is_occluded(block_id):
        return scene, ExecutionOutcome("pick_failed", reason="occluded")

    try:
        goal = oracle_place_pose(scene, action.place, ignore=block_id)
    except AmbiguousRefError as e:
        return scene, ExecutionOutcome("place_failed", reason="ambiguous", detail=e.count)
    except (NoMatchError, world.WorkspaceError):
        return scene, ExecutionOutcome("place_failed", reason="no_match")

    out = scene.copy()
    out.objects[block_id] = replace(block, support=Support.table())  # lifted

    drop = perturb.roll_drop(block.pose, goal, cfg, streams.channel("drop"))
    place_rng = streams.channel("place")
    if drop.dropped:
        landing = perturb.perturb_place(drop.at, cfg, place_rng)
        landing = Pose(landing.x, landing.y, block.pose.theta)
        final, _ = _land(out, block_id, landing, cfg, streams)
        out.clock += drop.t_drop
        return out, ExecutionOutcome("dropped", at=final, elapsed_seconds=drop.t_drop)

    duration = block.pose.distance(goal) / cfg.transport_speed
    landing = perturb.perturb_place(goal, cfg, place_rng)
    landing = Pose(landing.x, landing.y, block.pose.theta)
    final, support_kind = _land(out, block_id, landing, cfg, streams)
    out.clock += duration
    if support_kind == "toppled":
        return out, ExecutionOutcome("toppled", at=final, elapsed_seconds=duration)
    return out, ExecutionOutcome("success", elapsed_seconds=duration)
