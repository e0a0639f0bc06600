"""Task library: samplers, instruction templates, goal specifications.

Thirteen tasks (A through M). A is the single pick-and-place primitive in
three flavors; B through K are the long-horizon benchmark tasks; L and M are
the extended tasks. Each task contributes a seeded sampler and a goal builder
that turns a scene into goal atoms; the builder is shared with the rule-based
planner, which reconstructs goals from perceived scenes.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import lang, world
from .geometry import Footprint, intersection_area
from .lang import ZONE_MATCH_THRESHOLD, parse_instruction, render_instruction
from .primitives import Action, PlaceTarget
from .world import (
    ALL_COLORS,
    Color,
    Kind,
    ObjectRef,
    Pose,
    Region,
    Scene,
    SceneObject,
    SizeClass,
    Support,
    color_sort_key,
    region_of,
)

INSTANCE_SCHEMA = "instance/1"

COLLINEAR_TOL = 0.01
COLLINEAR_MAX_GAP = 0.08

#: Largest block group whose stacking orders are enumerated as separate goal
#: candidates; larger groups fall back to one single-stack atom plus
#: membership atoms.
MAX_ENUMERATED_STACK = 4

_SAMPLER_SALT = 0x5EED_7AB1E
_MAX_INSTANCE_ATTEMPTS = 16


class TaskId(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"
    F = "F"
    G = "G"
    H = "H"
    I = "I"  # noqa: E741
    J = "J"
    K = "K"
    L = "L"
    M = "M"

    def __str__(self) -> str:  # noqa: D105
        return self.value


SEEN_TASKS = (TaskId.A, TaskId.B, TaskId.C, TaskId.D, TaskId.E)
UNSEEN_TASKS = (TaskId.F, TaskId.G, TaskId.H, TaskId.I, TaskId.J, TaskId.K)
EXTENDED_TASKS = (TaskId.L, TaskId.M)


@dataclass(frozen=True)
class TaskMeta:
    name: str
    split: str  # "seen" | "unseen" | "extended"
    min_steps_floor: int
    summary: str


TASKS: dict[TaskId, TaskMeta] = {
    TaskId.A: TaskMeta(
        "Pick-and-place primitives", "seen", 1,
        "one primitive: vanilla / size-qualified / spatial placement"),
    TaskId.B: TaskMeta(
        "Put the blocks in the bowls with matching colors", "seen", 5,
        "5-7 color-distinct blocks and the same-colored bowls"),
    TaskId.C: TaskMeta(
        "Stack smaller blocks over bigger blocks of the same color", "seen", 3,
        "3-5 colors, one smaller and one bigger block each"),
    TaskId.D: TaskMeta(
        "Stack all the blocks in the [ABS_POS] area", "seen", 5,
        "5-7 blocks scattered outside a sampled target region"),
    TaskId.E: TaskMeta(
        "Move all blocks of a color that occur in even numbers to the same colored zone", "seen", 5,
        "3 colors with mixed counts, at least one even; one zone per color"),
    TaskId.F: TaskMeta(
        "Put the blocks in the bowls with mismatching colors", "unseen", 5,
        "5-7 color-distinct blocks and the same-colored bowls"),
    TaskId.G: TaskMeta(
        "Stack blocks of the same size", "unseen", 3,
        "two size classes with 2-4 blocks each, at least 5 in total"),
    TaskId.H: TaskMeta(
        "Stack blocks in alternate colors", "unseen", 3,
        "two colors with equal counts of 2-4 blocks"),
    TaskId.I: TaskMeta(
        "Stack blocks of the same color in the zone with same color, with the bigger blocks underneath",
        "unseen", 3,
        "3-5 colors, smaller+bigger block pairs, one zone per color"),
    TaskId.J: TaskMeta(
        "Move all the blocks in the [ABS_POS] area to the [ABS_POS] area", "unseen", 5,
        "5-7 blocks inside a source corner region, opposite target corner"),
    TaskId.K: TaskMeta(
        "Stack blocks of the same color", "unseen", 5,
        "2-3 colors with 2-4 blocks each, at least one color with 3 or more"),
    TaskId.L: TaskMeta(
        "Stack all the blocks that occur in even numbers", "extended", 3,
        "two colors, one even count and one odd count"),
    TaskId.M: TaskMeta(
        "Arrange all the blocks in a straight line", "extended", 5,
        "5-7 blocks scattered in the top and bottom row thirds"),
}


# ---------------------------------------------------------------------------
# Goal atoms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GoalAtom:
    """One independently checkable goal predicate (the scoring unit)."""

    kind: str
    block: int | None = None
    bowl: int | None = None
    zone: int | None = None
    above: int | None = None
    below: int | None = None
    region: Region | None = None
    members: tuple[int, ...] | None = None
    level: int | None = None
    color: Color | None = None

    def satisfied(self, scene: Scene) -> bool:
        return _ATOM_CHECKS[self.kind](self, scene)

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        for name in ("block", "bowl", "zone", "above", "below", "level"):
            v = getattr(self, name)
            if v is not None:
                d[name] = v
        if self.region is not None:
            d["region"] = self.region.display
        if self.members is not None:
            d["members"] = list(self.members)
        if self.color is not None:
            d["color"] = self.color.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "GoalAtom":
        return cls(
            kind=d["kind"],
            block=d.get("block"),
            bowl=d.get("bowl"),
            zone=d.get("zone"),
            above=d.get("above"),
            below=d.get("below"),
            region=Region.from_display(d["region"]) if "region" in d else None,
            members=tuple(d["members"]) if "members" in d else None,
            level=d.get("level"),
            color=Color(d["color"]) if "color" in d else None,
        )


TRUE_ATOM = GoalAtom(kind="true")


def _check_true(atom: GoalAtom, scene: Scene) -> bool:
    return True


def _check_in_bowl(atom: GoalAtom, scene: Scene) -> bool:
    return scene.get(atom.block).support == Support.in_bowl(atom.bowl)


def _check_in_mismatched_bowl(atom: GoalAtom, scene: Scene) -> bool:
    block = scene.get(atom.block)
    if block.support.kind != "in_bowl":
        return False
    return scene.get(block.support.base).color is not block.color


def _check_on_object(atom: GoalAtom, scene: Scene) -> bool:
    return scene.get(atom.above).support == Support.on(atom.below)


def _check_in_region(atom: GoalAtom, scene: Scene) -> bool:
    return region_of(scene.get(atom.block).pose) is atom.region


def _check_in_zone(atom: GoalAtom, scene: Scene) -> bool:
    return world.footprint_overlap(scene.get(atom.block), scene.get(atom.zone)) >= ZONE_MATCH_THRESHOLD


def _check_single_stack(atom: GoalAtom, scene: Scene) -> bool:
    members = set(atom.members)
    bases = [
        m for m in members
        if not (scene.get(m).support.kind == "on" and scene.get(m).support.base in members)
    ]
    if len(bases) != 1:
        return False
    chain = world.stack_of(scene, bases[0])
    # The chain rooted at the base must be exactly the member set.
    base_index = chain.index(bases[0])
    chain = chain[base_index:]
    return set(chain) == members


def _maximal_stacks(scene: Scene) -> list[list[int]]:
    out = []
    for b in scene.blocks:
        if b.support.kind == "on":
            continue
        chain = world.stack_of(scene, b.id)
        if len(chain) >= 2:
            out.append(chain)
    return out


def _check_level_color(atom: GoalAtom, scene: Scene) -> bool:
    for chain in _maximal_stacks(scene):
        if len(chain) > atom.level and scene.get(chain[atom.level]).color is atom.color:
            return True
    return False


def _check_bigger_beneath(atom: GoalAtom, scene: Scene) -> bool:
    chain = world.stack_of(scene, atom.above)
    if atom.below not in chain:
        return False
    return chain.index(atom.below) < chain.index(atom.above)


def _check_collinear(atom: GoalAtom, scene: Scene) -> bool:
    members = [scene.get(i) for i in atom.members]
    if len(members) < 2:
        return True
    pts = np.array([[o.pose.x, o.pose.y] for o in members])
    centered = pts - pts.mean(axis=0)
    cov = centered.T @ centered
    _, vecs = np.linalg.eigh(cov)
    axis = vecs[:, -1]
    perp = vecs[:, 0]
    if np.max(np.abs(centered @ perp)) > COLLINEAR_TOL:
        return False
    t = centered @ axis
    order = np.argsort(t)
    for a, b in zip(order[:-1], order[1:]):
        clearance = (t[b] - t[a]) - (members[a].edge + members[b].edge) / 2.0
        if clearance > COLLINEAR_MAX_GAP:
            return False
    return True


def _all_color_stacks(scene: Scene, color: Color) -> list[list[int]]:
    return [
        chain for chain in _maximal_stacks(scene)
        if all(scene.get(i).color is color for i in chain)
    ]


def _check_stacked_with_color(atom: GoalAtom, scene: Scene) -> bool:
    stacks = _all_color_stacks(scene, atom.color)
    for chain in stacks:
        if atom.block in chain:
            # Membership counts only while no rival same-color stack exists.
            return len(stacks) == 1
    return False


def _check_stacked_among(atom: GoalAtom, scene: Scene) -> bool:
    chain = world.stack_of(scene, atom.block)
    return len(chain) >= 2 and set(chain) <= set(atom.members)


_ATOM_CHECKS = {
    "true": _check_true,
    "in_bowl": _check_in_bowl,
    "in_mismatched_bowl": _check_in_mismatched_bowl,
    "on_object": _check_on_object,
    "in_region": _check_in_region,
    "in_zone": _check_in_zone,
    "single_stack": _check_single_stack,
    "level_color": _check_level_color,
    "bigger_beneath": _check_bigger_beneath,
    "collinear": _check_collinear,
    "stacked_with_color": _check_stacked_with_color,
    "stacked_among": _check_stacked_among,
}


@dataclass(frozen=True)
class GoalSpec:
    """Disjunction over candidate atom sets; conjunction within a candidate.

    Candidates are padded with trivially-true atoms to a common length so the
    max-over-candidates score shares one denominator.
    """

    candidates: tuple[tuple[GoalAtom, ...], ...]

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("goal needs at least one candidate")
        width = max(len(c) for c in self.candidates)
        padded = tuple(
            tuple(c) + (TRUE_ATOM,) * (width - len(c)) for c in self.candidates
        )
        object.__setattr__(self, "candidates", padded)

    @property
    def atom_count(self) -> int:
        return len(self.candidates[0])

    def satisfied_counts(self, scene: Scene) -> list[int]:
        return [sum(1 for a in cand if a.satisfied(scene)) for cand in self.candidates]

    def best_candidate(self, scene: Scene) -> int:
        counts = self.satisfied_counts(scene)
        return max(range(len(counts)), key=lambda i: (counts[i], -i))

    def is_satisfied(self, scene: Scene) -> bool:
        return any(all(a.satisfied(scene) for a in cand) for cand in self.candidates)

    def score(self, scene: Scene) -> float:
        """Partial credit in [0, 100]: the best candidate's satisfied fraction."""
        return 100.0 * max(self.satisfied_counts(scene)) / self.atom_count

    def to_dict(self) -> dict:
        return {"candidates": [[a.to_dict() for a in cand] for cand in self.candidates]}

    @classmethod
    def from_dict(cls, d: dict) -> "GoalSpec":
        return cls(tuple(
            tuple(GoalAtom.from_dict(a) for a in cand) for cand in d["candidates"]
        ))


# ---------------------------------------------------------------------------
# Goal builders (shared by the sampler and the rule-based planner)
# ---------------------------------------------------------------------------


def _blocks_by_id(scene: Scene) -> list[SceneObject]:
    return scene.blocks  # already id-sorted


def _zone_of_color(scene: Scene, color: Color) -> SceneObject:
    for z in scene.zones:
        if z.color is color:
            return z
    raise world.NoMatchError(f"no {color} zone in scene")


def _pair_by_size(scene: Scene, color: Color) -> tuple[int, int]:
    """(smaller_id, bigger_id) for a color with one block of each size."""
    smaller = [b for b in scene.blocks if b.color is color and b.size is SizeClass.SMALLER]
    bigger = [b for b in scene.blocks if b.color is color and b.size is SizeClass.BIGGER]
    if len(smaller) != 1 or len(bigger) != 1:
        raise world.NoMatchError(f"color {color} lacks a smaller/bigger pair")
    return smaller[0].id, bigger[0].id


def _chain_candidates(groups: list[list[int]]) -> list[list[GoalAtom]]:
    """Stack-order candidates: the cross product of per-group permutations
    (groups of more than MAX_ENUMERATED_STACK use the single-stack form)."""
    per_group: list[list[list[GoalAtom]]] = []
    for members in groups:
        variants: list[list[GoalAtom]] = []
        if len(members) <= MAX_ENUMERATED_STACK:
            for perm in itertools.permutations(members):
                variants.append([
                    GoalAtom(kind="on_object", above=perm[i + 1], below=perm[i])
                    for i in range(len(perm) - 1)
                ])
        else:
            variants.append(
                [GoalAtom(kind="single_stack", members=tuple(members))]
                + [GoalAtom(kind="stacked_among", block=b, members=tuple(members)) for b in members]
            )
        per_group.append(variants)
    out = []
    for combo in itertools.product(*per_group):
        atoms: list[GoalAtom] = []
        for part in combo:
            atoms.extend(part)
        out.append(atoms)
    return out


def _goal_a(scene: Scene, params: dict) -> GoalSpec:
    action: Action = params["action"]
    picked = world.resolve_reference(scene, action.pick)
    place = action.place
    if place.kind == "on_object":
        below = world.resolve_reference(scene, place.ref)
        return GoalSpec(((GoalAtom(kind="on_object", above=picked, below=below),),))
    if place.kind == "region":
        return GoalSpec(((GoalAtom(kind="in_region", block=picked, region=place.region),),))
    raise ValueError(f"primitive goals support on-object and region targets, not {place.kind}")


def _goal_b(scene: Scene, params: dict) -> GoalSpec:
    atoms = []
    for b in _blocks_by_id(scene):
        bowl = next(w for w in scene.bowls if w.color is b.color)
        atoms.append(GoalAtom(kind="in_bowl", block=b.id, bowl=bowl.id))
    return GoalSpec((tuple(atoms),))


def _goal_c(scene: Scene, params: dict) -> GoalSpec:
    colors = sorted({b.color for b in scene.blocks}, key=color_sort_key)
    atoms = []
    for c in colors:
        smaller, bigger = _pair_by_size(scene, c)
        atoms.append(GoalAtom(kind="on_object", above=smaller, below=bigger))
    return GoalSpec((tuple(atoms),))


def _goal_d(scene: Scene, params: dict) -> GoalSpec:
    region: Region = params["region"]
    blocks = [b.id for b in _blocks_by_id(scene)]
    base = blocks[0]
    atoms = [GoalAtom(kind="in_region", block=base, region=region),
             GoalAtom(kind="single_stack", members=tuple(blocks))]
    atoms += [GoalAtom(kind="in_region", block=b, region=region) for b in blocks[1:]]
    return GoalSpec((tuple(atoms),))


def even_count_colors(scene: Scene) -> list[Color]:
    """Colors whose block counts are even: the admissible goal colors."""
    counts: dict[Color, int] = {}
    for b in scene.blocks:
        counts[b.color] = counts.get(b.color, 0) + 1
    return sorted((c for c, n in counts.items() if n % 2 == 0), key=color_sort_key)


def _goal_e(scene: Scene, params: dict) -> GoalSpec:
    candidates = []
    for color in even_count_colors(scene):
        zone = _zone_of_color(scene, color)
        atoms = tuple(
            GoalAtom(kind="in_zone", block=b.id, zone=zone.id)
            for b in _blocks_by_id(scene) if b.color is color
        )
        candidates.append(atoms)
    if not candidates:
        raise world.NoMatchError("no color occurs in even numbers")
    return GoalSpec(tuple(candidates))


def _goal_f(scene: Scene, params: dict) -> GoalSpec:
    atoms = tuple(GoalAtom(kind="in_mismatched_bowl", block=b.id) for b in _blocks_by_id(scene))
    return GoalSpec((atoms,))


def _goal_g(scene: Scene, params: dict) -> GoalSpec:
    groups = []
    for size in SizeClass:
        members = [b.id for b in _blocks_by_id(scene) if b.size is size]
        if len(members) >= 2:
            groups.append(members)
    return GoalSpec(tuple(tuple(c) for c in _chain_candidates(groups)))


def _goal_h(scene: Scene, params: dict) -> GoalSpec:
    colors = sorted({b.color for b in scene.blocks}, key=color_sort_key)
    if len(colors) != 2:
        raise world.NoMatchError("alternate-color stacking needs exactly two colors")
    total = len(scene.blocks)
    candidates = []
    for base in colors:
        other = colors[1] if base is colors[0] else colors[0]
        atoms = tuple(
            GoalAtom(kind="level_color", level=i, color=base if i % 2 == 0 else other)
            for i in range(total)
        )
        candidates.append(atoms)
    return GoalSpec(tuple(candidates))


def _goal_i(scene: Scene, params: dict) -> GoalSpec:
    colors = sorted({b.color for b in scene.blocks}, key=color_sort_key)
    atoms = []
    for c in colors:
        smaller, bigger = _pair_by_size(scene, c)
        zone = _zone_of_color(scene, c)
        atoms.append(GoalAtom(kind="in_zone", block=bigger, zone=zone.id))
        atoms.append(GoalAtom(kind="on_object", above=smaller, below=bigger))
        atoms.append(GoalAtom(kind="bigger_beneath", above=smaller, below=bigger))
    return GoalSpec((tuple(atoms),))


def _goal_j(scene: Scene, params: dict) -> GoalSpec:
    target: Region = params["target"]
    atoms = tuple(
        GoalAtom(kind="in_region", block=b.id, region=target) for b in _blocks_by_id(scene)
    )
    return GoalSpec((atoms,))


def _goal_k(scene: Scene, params: dict) -> GoalSpec:
    colors = sorted({b.color for b in scene.blocks}, key=color_sort_key)
    atoms = []
    for c in colors:
        for b in _blocks_by_id(scene):
            if b.color is c:
                atoms.append(GoalAtom(kind="stacked_with_color", block=b.id, color=c))
    return GoalSpec((tuple(atoms),))


def _goal_l(scene: Scene, params: dict) -> GoalSpec:
    counts: dict[Color, list[int]] = {}
    for b in scene.blocks:
        counts.setdefault(b.color, []).append(b.id)
    evens = sorted((c for c, ids in counts.items() if len(ids) % 2 == 0), key=color_sort_key)
    if len(evens) != 1:
        raise world.NoMatchError("expected exactly one even-count color")
    members = counts[evens[0]]
    return GoalSpec(tuple(tuple(c) for c in _chain_candidates([members])))


def _goal_m(scene: Scene, params: dict) -> GoalSpec:
    members = tuple(b.id for b in _blocks_by_id(scene))
    return GoalSpec(((GoalAtom(kind="collinear", members=members),),))


_GOAL_BUILDERS = {
    TaskId.A: _goal_a,
    TaskId.B: _goal_b,
    TaskId.C: _goal_c,
    TaskId.D: _goal_d,
    TaskId.E: _goal_e,
    TaskId.F: _goal_f,
    TaskId.G: _goal_g,
    TaskId.H: _goal_h,
    TaskId.I: _goal_i,
    TaskId.J: _goal_j,
    TaskId.K: _goal_k,
    TaskId.L: _goal_l,
    TaskId.M: _goal_m,
}


def build_goal(task: TaskId, scene: Scene, params: dict) -> GoalSpec:
    """Goal atoms for a task over a concrete scene (pure; usable on perceived
    scenes by planners that only see observations)."""
    return _GOAL_BUILDERS[task](scene, params)


# ---------------------------------------------------------------------------
# Instruction rendering and task identification
# ---------------------------------------------------------------------------


def _instruction_for(task: TaskId, params: dict) -> str:
    if task is TaskId.A:
        return render_instruction(params["action"])
    if task is TaskId.D:
        return f"Stack all the blocks in the {params['region'].display} area"
    if task is TaskId.J:
        return f"Move all the blocks in the {params['source'].display} area to the {params['target'].display} area"
    return TASKS[task].name


_D_RE = re.compile(r"^stack all the blocks in the (\w+ \w+) area$")
_J_RE = re.compile(r"^move all the blocks in the (\w+ \w+) area to the (\w+ \w+) area$")

_FIXED_INSTRUCTIONS = {
    TASKS[t].name.lower(): t
    for t in (TaskId.B, TaskId.C, TaskId.E, TaskId.F, TaskId.G,
              TaskId.H, TaskId.I, TaskId.K, TaskId.L, TaskId.M)
}


def identify_task(instruction: str) -> tuple[TaskId, dict] | None:
    """Map a high-level instruction back to (task, params); primitive
    instructions identify as task A with the parsed action."""
    text = instruction.strip().rstrip(".").lower()
    if text in _FIXED_INSTRUCTIONS:
        return _FIXED_INSTRUCTIONS[text], {}
    m = _D_RE.match(text)
    if m:
        return TaskId.D, {"region": Region.from_display(m.group(1))}
    m = _J_RE.match(text)
    if m:
        return TaskId.J, {"source": Region.from_display(m.group(1)),
                          "target": Region.from_display(m.group(2))}
    try:
        action = parse_instruction(instruction)
    except lang.ParseError:
        return None
    return TaskId.A, {"action": action}


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


class _Spawner:
    """Places objects with rejection sampling under the spawn separation rule,
    falling back to a deterministic grid scan when sampling fails."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.scene = Scene()
        self._next_id = 0

    def _separated(self, cand: Footprint, kind: Kind) -> bool:
        for o in self.scene.objects.values():
            other = o.footprint()
            if kind is Kind.BLOCK and o.kind is Kind.BLOCK:
                small_area = min(cand.area, other.area)
                if intersection_area(cand, other) > world.SPAWN_MAX_OVERLAP * small_area:
                    return False
            else:
                # Pairs involving a bowl or zone must not overlap at all.
                if intersection_area(cand, other) > 0.0:
                    return False
        return True

    def spawn(
        self,
        kind: Kind,
        color: Color,
        size: SizeClass | None = None,
        x_range: tuple[float, float] | None = None,
        y_ranges: tuple[tuple[float, float], ...] | None = None,
        exclude_regions: tuple[Region, ...] = (),
        tries: int = 120,
    ) -> SceneObject:
        edge = (size.edge if size else (world.BOWL_DIAMETER if kind is Kind.BOWL else world.ZONE_EDGE))
        half = edge / 2.0
        x0, x1 = x_range if x_range else (0.0, world.WORKSPACE_W)
        x0, x1 = max(x0, half + 0.005), min(x1, world.WORKSPACE_W - half - 0.005)
        bands = y_ranges if y_ranges else ((0.0, world.WORKSPACE_H),)
        bands = tuple(
            (max(b0, half + 0.005), min(b1, world.WORKSPACE_H - half - 0.005)) for b0, b1 in bands
        )

        def ok(x: float, y: float) -> bool:
            p = Pose(x, y)
            if exclude_regions and region_of(p) in exclude_regions:
                return False
            return self._separated(Footprint(cx=x, cy=y, w=edge, h=edge, disc=kind is Kind.BOWL), kind)

        for _ in range(tries):
            b0, b1 = bands[int(self.rng.integers(len(bands)))]
            x = float(self.rng.uniform(x0, x1))
            y = float(self.rng.uniform(b0, b1))
            if ok(x, y):
                return self._add(kind, color, size, Pose(x, y))
        # Deterministic fallback: scan a fixed grid for the first free spot.
        for y in np.arange(0.03, world.WORKSPACE_H - 0.02, 0.05):
            for x in np.arange(0.03, world.WORKSPACE_W - 0.02, 0.05):
                in_band = any(b0 <= y <= b1 for b0, b1 in bands) and x0 <= x <= x1
                if in_band and ok(float(x), float(y)):
                    return self._add(kind, color, size, Pose(float(x), float(y)))
        raise RuntimeError(f"no room to spawn {kind} {color}")

    def _add(self, kind: Kind, color: Color, size: SizeClass | None, pose: Pose) -> SceneObject:
        obj = SceneObject(id=self._next_id, kind=kind, color=color, pose=pose, size=size)
        self._next_id += 1
        self.scene.add(obj)
        return obj


def _choice(rng: np.random.Generator, seq):
    return seq[int(rng.integers(len(seq)))]


def _sample_colors(rng: np.random.Generator, n: int) -> list[Color]:
    idx = rng.choice(len(ALL_COLORS), size=n, replace=False)
    return [ALL_COLORS[i] for i in sorted(int(i) for i in idx)]


#: Bands used by B/F so every block-to-bowl transport lasts at least ~1 s.
_BLOCK_BAND = (0.03, 0.25)
_BOWL_BAND = (0.72, 0.97)

#: Opposite-corner region pairs for task J (appendix pattern).
_J_PAIRS = (
    (Region.TOP_LEFT, Region.BOTTOM_RIGHT),
    (Region.TOP_RIGHT, Region.BOTTOM_LEFT),
    (Region.BOTTOM_LEFT, Region.TOP_RIGHT),
    (Region.BOTTOM_RIGHT, Region.TOP_LEFT),
)

#: Task M scatters blocks outside the center row so the staging row stays free.
_M_BANDS = ((0.03, 0.145), (0.355, 0.47))


def _sample_a(rng: np.random.Generator) -> tuple[Scene, dict]:
    sp = _Spawner(rng)
    variant = _choice(rng, ("vanilla", "size", "spatial"))
    if variant == "vanilla":
        colors = _sample_colors(rng, int(rng.integers(2, 5)))
        size = _choice(rng, tuple(SizeClass))
        for c in colors:
            sp.spawn(Kind.BLOCK, c, size)
        action = Action(
            pick=ObjectRef(kind=Kind.BLOCK, color=colors[0]),
            place=PlaceTarget.on_object(ObjectRef(kind=Kind.BLOCK, color=colors[1])),
        )
    elif variant == "size":
        colors = _sample_colors(rng, 2)
        for c in colors:
            for s in SizeClass:
                sp.spawn(Kind.BLOCK, c, s)
        action = Action(
            pick=ObjectRef(kind=Kind.BLOCK, color=colors[0], size=SizeClass.SMALLER),
            place=PlaceTarget.on_object(ObjectRef(kind=Kind.BLOCK, color=colors[1], size=SizeClass.BIGGER)),
        )
    else:
        region = _choice(rng, world.REGIONS)
        colors = _sample_colors(rng, int(rng.integers(1, 4)))
        size = _choice(rng, tuple(SizeClass))
        sp.spawn(Kind.BLOCK, colors[0], size, exclude_regions=(region,))
        for c in colors[1:]:
            sp.spawn(Kind.BLOCK, c, size)
        action = Action(
            pick=ObjectRef(kind=Kind.BLOCK, color=colors[0]),
            place=PlaceTarget.in_region(region),
        )
    return sp.scene, {"action": action}


def _sample_bowls_blocks(rng: np.random.Generator) -> tuple[Scene, dict]:
    n = int(rng.integers(5, 8))
    colors = _sample_colors(rng, n)
    sp = _Spawner(rng)
    for c in colors:
        sp.spawn(Kind.BLOCK, c, _choice(rng, tuple(SizeClass)), x_range=_BLOCK_BAND)
    bowl_colors = list(colors)
    rng.shuffle(bowl_colors)
    for c in bowl_colors:
        sp.spawn(Kind.BOWL, c, x_range=_BOWL_BAND)
    return sp.scene, {}


def _sample_c(rng: np.random.Generator) -> tuple[Scene, dict]:
    k = int(rng.integers(3, 6))
    colors = _sample_colors(rng, k)
    sp = _Spawner(rng)
    for c in colors:
        for s in SizeClass:
            sp.spawn(Kind.BLOCK, c, s)
    return sp.scene, {}


def _sample_d(rng: np.random.Generator) -> tuple[Scene, dict]:
    region = _choice(rng, world.REGIONS)
    n = int(rng.integers(5, 8))
    size = _choice(rng, tuple(SizeClass))
    sp = _Spawner(rng)
    palette = [ALL_COLORS[int(i)] for i in rng.integers(0, len(ALL_COLORS), size=n)]
    for c in palette:
        sp.spawn(Kind.BLOCK, c, size, exclude_regions=(region,))
    return sp.scene, {"region": region}


def _sample_e(rng: np.random.Generator) -> tuple[Scene, dict]:
    colors = _sample_colors(rng, 3)
    n_even = int(rng.integers(1, 3))
    even_colors = list(rng.choice(len(colors), size=n_even, replace=False))
    counts = {}
    for i, c in enumerate(colors):
        counts[c] = 6 if i in even_colors else int(_choice(rng, (3, 5)))
    sp = _Spawner(rng)
    for c in colors:
        sp.spawn(Kind.ZONE, c)
    for c in colors:
        for _ in range(counts[c]):
            sp.spawn(Kind.BLOCK, c, SizeClass.SMALLER)
    return sp.scene, {}


def _sample_g(rng: np.random.Generator) -> tuple[Scene, dict]:
    while True:
        k_small, k_big = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        if k_small + k_big >= 5:
            break
    sp = _Spawner(rng)
    palette = [ALL_COLORS[int(i)] for i in rng.integers(0, len(ALL_COLORS), size=k_small + k_big)]
    for c in palette[:k_small]:
        sp.spawn(Kind.BLOCK, c, SizeClass.SMALLER)
    for c in palette[k_small:]:
        sp.spawn(Kind.BLOCK, c, SizeClass.BIGGER)
    return sp.scene, {}


def _sample_h(rng: np.random.Generator) -> tuple[Scene, dict]:
    n = int(rng.integers(2, 5))
    colors = _sample_colors(rng, 2)
    size = _choice(rng, tuple(SizeClass))
    sp = _Spawner(rng)
    for _ in range(n):
        for c in colors:
            sp.spawn(Kind.BLOCK, c, size)
    return sp.scene, {}


def _sample_i(rng: np.random.Generator) -> tuple[Scene, dict]:
    k = int(rng.integers(3, 6))
    colors = _sample_colors(rng, k)
    sp = _Spawner(rng)
    for c in colors:
        sp.spawn(Kind.ZONE, c)
    for c in colors:
        for s in SizeClass:
            sp.spawn(Kind.BLOCK, c, s)
    return sp.scene, {}


def _sample_j(rng: np.random.Generator) -> tuple[Scene, dict]:
    source, target = _choice(rng, _J_PAIRS)
    n = int(rng.integers(5, 8))
    x0, y0, x1, y1 = source.bounds
    sp = _Spawner(rng)
    palette = [ALL_COLORS[int(i)] for i in rng.integers(0, len(ALL_COLORS), size=n)]
    for c in palette:
        sp.spawn(
            Kind.BLOCK, c, _choice(rng, tuple(SizeClass)),
            x_range=(x0 + 0.015, x1 - 0.015), y_ranges=((y0 + 0.015, y1 - 0.015),),
        )
    return sp.scene, {"source": source, "target": target}


def _sample_k(rng: np.random.Generator) -> tuple[Scene, dict]:
    while True:
        ncolors = int(rng.integers(2, 4))
        counts = [int(rng.integers(2, 5)) for _ in range(ncolors)]
        if max(counts) >= 3 and sum(counts) - ncolors >= 5:
            break
    colors = _sample_colors(rng, ncolors)
    sp = _Spawner(rng)
    for c, count in zip(colors, counts):
        size = _choice(rng, tuple(SizeClass))
        for _ in range(count):
            sp.spawn(Kind.BLOCK, c, size)
    return sp.scene, {}


def _sample_l(rng: np.random.Generator) -> tuple[Scene, dict]:
    colors = _sample_colors(rng, 2)
    even_count = int(_choice(rng, (4, 6)))
    odd_count = int(_choice(rng, (3, 5)))
    sp = _Spawner(rng)
    size_even = _choice(rng, tuple(SizeClass))
    size_odd = _choice(rng, tuple(SizeClass))
    for _ in range(even_count):
        sp.spawn(Kind.BLOCK, colors[0], size_even)
    for _ in range(odd_count):
        sp.spawn(Kind.BLOCK, colors[1], size_odd)
    return sp.scene, {}


def _sample_m(rng: np.random.Generator) -> tuple[Scene, dict]:
    n = int(rng.integers(5, 8))
    sp = _Spawner(rng)
    palette = [ALL_COLORS[int(i)] for i in rng.integers(0, len(ALL_COLORS), size=n)]
    for c in palette:
        sp.spawn(Kind.BLOCK, c, _choice(rng, tuple(SizeClass)), y_ranges=_M_BANDS)
    return sp.scene, {}


_SAMPLERS = {
    TaskId.A: _sample_a,
    TaskId.B: _sample_bowls_blocks,
    TaskId.C: _sample_c,
    TaskId.D: _sample_d,
    TaskId.E: _sample_e,
    TaskId.F: _sample_bowls_blocks,
    TaskId.G: _sample_g,
    TaskId.H: _sample_h,
    TaskId.I: _sample_i,
    TaskId.J: _sample_j,
    TaskId.K: _sample_k,
    TaskId.L: _sample_l,
    TaskId.M: _sample_m,
}


# ---------------------------------------------------------------------------
# Task instances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TaskInstance:
    task: TaskId
    seed: int
    instruction: str
    scene0: Scene
    goal: GoalSpec
    min_steps: int

    def to_dict(self) -> dict:
        return {
            "schema": INSTANCE_SCHEMA,
            "task": self.task.value,
            "seed": self.seed,
            "instruction": self.instruction,
            "min_steps": self.min_steps,
            "scene": world.scene_to_dict(self.scene0),
            "goal": self.goal.to_dict(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, d: dict) -> "TaskInstance":
        if d.get("schema") != INSTANCE_SCHEMA:
            raise ValueError(f"unsupported instance schema {d.get('schema')!r}")
        return cls(
            task=TaskId(d["task"]),
            seed=d["seed"],
            instruction=d["instruction"],
            scene0=world.scene_from_dict(d["scene"]),
            goal=GoalSpec.from_dict(d["goal"]),
            min_steps=d["min_steps"],
        )

    @classmethod
    def from_json(cls, text: str) -> "TaskInstance":
        return cls.from_dict(json.loads(text))


def sample_instance(task: TaskId, seed: int) -> TaskInstance:
    """Deterministic task instance for (task, seed).

    Samplers resample internally until the spawn-separation rule holds and the
    initial scene satisfies zero goal atoms (so a no-op planner scores 0).
    """
    from . import oracle  # local import: oracle plans with task goals

    task = TaskId(task)
    for attempt in range(_MAX_INSTANCE_ATTEMPTS):
        ss = np.random.SeedSequence(
            [_SAMPLER_SALT, list(TaskId).index(task), int(seed) & 0xFFFFFFFF, attempt]
        )
        rng = np.random.Generator(np.random.PCG64(ss))
        try:
            scene, params = _SAMPLERS[task](rng)
        except RuntimeError:
            continue
        scene.validate(spawn=True)
        goal = build_goal(task, scene, params)
        if max(goal.satisfied_counts(scene)) != 0:
            continue
        plan = oracle.plan_actions(scene, goal, max_steps=64)
        if plan is None:
            continue
        floor = TASKS[task].min_steps_floor
        if len(plan) < floor:
            continue
        return TaskInstance(
            task=task,
            seed=int(seed),
            instruction=_instruction_for(task, params),
            scene0=scene,
            goal=goal,
            min_steps=len(plan),
        )
    raise RuntimeError(f"could not sample a valid instance for task {task} seed {seed}")


def goal_atoms(instance: TaskInstance) -> GoalSpec:
    """The instance's goal specification."""
    return instance.goal


def is_goal_satisfied(scene: Scene, instance: TaskInstance) -> bool:
    """True iff some goal candidate has every atom satisfied."""
    return instance.goal.is_satisfied(scene)
