"""Scripted expert planners.

The oracle sees the true scene and the goal specification and emits the next
ground-truth action: it picks the goal candidate with the most satisfied
atoms (ties toward the first), then fixes the first unsatisfied atom. Object
ties break by ascending id and references carry ordinals whenever plain
descriptors are ambiguous. Under perturbation the same logic doubles as
recovery: offending stacks are deconstructed before rebuilding.
"""

from __future__ import annotations

from . import world
from .lang import minimal_ref
from .perturb import PerturbConfig, RandomSource
from .primitives import Action, PlaceTarget, execute_pick_place
from .tasks import GoalAtom, GoalSpec, TaskInstance
from .world import Color, Region, Scene, color_sort_key, region_of, stack_of


class StuckError(world.SimError):
    """No goal atom is fixable by a single pick-and-place."""


def _ref(scene: Scene, obj_id: int):
    return minimal_ref(scene, obj_id)


def _unstack_action(scene: Scene, stacked_id: int) -> Action:
    """Remove the top of stacked_id's stack to a free spot in its own region."""
    top = stack_of(scene, stacked_id)[-1]
    staging = region_of(scene.get(top).pose)
    return Action(pick=_ref(scene, top), place=PlaceTarget.in_region(staging))


def _guard_pick(scene: Scene, block_id: int) -> Action | None:
    """Deconstruction action when block_id cannot be picked directly."""
    if scene.is_occluded(block_id):
        return _unstack_action(scene, block_id)
    return None


def _lone(scene: Scene, block_id: int) -> bool:
    return len(stack_of(scene, block_id)) == 1


def _fix_in_bowl(atom: GoalAtom, scene: Scene, cand) -> Action:
    guard = _guard_pick(scene, atom.block)
    if guard:
        return guard
    return Action(pick=_ref(scene, atom.block), place=PlaceTarget.in_bowl(_ref(scene, atom.bowl)))


def _fix_in_mismatched_bowl(atom: GoalAtom, scene: Scene, cand) -> Action:
    guard = _guard_pick(scene, atom.block)
    if guard:
        return guard
    block = scene.get(atom.block)
    colors = sorted({w.color for w in scene.bowls}, key=color_sort_key)
    i = colors.index(block.color)
    target_color = colors[(i + 1) % len(colors)]
    bowl = next(w for w in scene.bowls if w.color is target_color)
    return Action(pick=_ref(scene, atom.block), place=PlaceTarget.in_bowl(_ref(scene, bowl.id)))


def _fix_on_object(atom: GoalAtom, scene: Scene, cand) -> Action:
    if scene.is_occluded(atom.above):
        return _unstack_action(scene, atom.above)
    if scene.is_occluded(atom.below):
        return _unstack_action(scene, atom.below)
    return Action(pick=_ref(scene, atom.above), place=PlaceTarget.on_object(_ref(scene, atom.below)))


def _fix_in_region(atom: GoalAtom, scene: Scene, cand) -> Action:
    guard = _guard_pick(scene, atom.block)
    if guard:
        return guard
    return Action(pick=_ref(scene, atom.block), place=PlaceTarget.in_region(atom.region))


def _fix_in_zone(atom: GoalAtom, scene: Scene, cand) -> Action:
    guard = _guard_pick(scene, atom.block)
    if guard:
        return guard
    return Action(pick=_ref(scene, atom.block), place=PlaceTarget.in_zone(_ref(scene, atom.zone)))


def _member_stacks(scene: Scene, members: set[int]) -> list[list[int]]:
    """Maximal stacks consisting solely of member blocks."""
    out = []
    for b in scene.blocks:
        if b.id not in members or b.support.kind == "on":
            continue
        chain = stack_of(scene, b.id)
        if len(chain) >= 2 and set(chain) <= members:
            out.append(chain)
    return out


def _grow_stack(scene: Scene, members: tuple[int, ...]) -> Action:
    """One step toward a single stack of exactly the member set."""
    member_set = set(members)
    chains = _member_stacks(scene, member_set)
    chains.sort(key=lambda c: (-len(c), c[0]))
    if chains:
        main = chains[0]
        outsiders = sorted(member_set - set(main))
    else:
        lone_members = [m for m in sorted(member_set) if _lone(scene, m)]
        if not lone_members:
            return _unstack_action(scene, sorted(member_set)[0])
        main = [lone_members[0]]
        outsiders = [m for m in sorted(member_set) if m != main[0]]
    if not outsiders:
        raise StuckError("stack complete but atom unsatisfied")
    nxt = outsiders[0]
    if scene.is_occluded(nxt):
        occluder = scene.child_of(nxt).id
        if occluder in member_set:
            nxt = stack_of(scene, nxt)[-1]
        else:
            return _unstack_action(scene, nxt)
    return Action(pick=_ref(scene, nxt), place=PlaceTarget.on_object(_ref(scene, main[-1])))


def _fix_single_stack(atom: GoalAtom, scene: Scene, cand) -> Action:
    return _grow_stack(scene, atom.members)


def _fix_stacked_among(atom: GoalAtom, scene: Scene, cand) -> Action:
    return _grow_stack(scene, atom.members)


def _fix_level_color(atom: GoalAtom, scene: Scene, cand) -> Action:
    expected: list[Color] = [a.color for a in cand if a.kind == "level_color"]

    def prefix_len(chain: list[int]) -> int:
        n = 0
        for i, block_id in enumerate(chain):
            if i >= len(expected) or scene.get(block_id).color is not expected[i]:
                break
            n += 1
        return n

    stacks = [
        stack_of(scene, b.id)
        for b in scene.blocks
        if b.support.kind != "on" and len(stack_of(scene, b.id)) >= 2
    ]
    stacks.sort(key=lambda c: (-prefix_len(c), c[0]))
    best = stacks[0] if stacks and prefix_len(stacks[0]) >= 2 else None

    if best is None:
        if stacks:  # a malformed stack exists: take it apart
            return _unstack_action(scene, stacks[0][0])
        base_candidates = [
            b.id for b in scene.blocks if b.color is expected[0] and _lone(scene, b.id)
        ]
        partner_candidates = [
            b.id for b in scene.blocks if b.color is expected[1] and _lone(scene, b.id)
        ]
        if not base_candidates or not partner_candidates:
            return _unstack_action(scene, scene.blocks[0].id)
        return Action(
            pick=_ref(scene, partner_candidates[0]),
            place=PlaceTarget.on_object(_ref(scene, base_candidates[0])),
        )
    matched = prefix_len(best)
    if len(best) > matched:
        # Wrong block sits at the first mismatched level.
        return _unstack_action(scene, best[0])
    needed = expected[matched]
    loose = [
        b.id for b in scene.blocks
        if b.color is needed and b.id not in best and _lone(scene, b.id)
    ]
    if not loose:
        candidates = [b.id for b in scene.blocks if b.color is needed and b.id not in best]
        if not candidates:
            raise StuckError(f"no {needed} block available for level {matched}")
        return _unstack_action(scene, candidates[0])
    return Action(pick=_ref(scene, loose[0]), place=PlaceTarget.on_object(_ref(scene, best[-1])))


def _fix_stacked_with_color(atom: GoalAtom, scene: Scene, cand) -> Action:
    color = atom.color
    stacks = [
        chain for chain in _member_stacks(scene, {b.id for b in scene.blocks if b.color is color})
    ]
    stacks.sort(key=lambda c: (-len(c), c[0]))
    if not stacks:
        lone_blocks = [b.id for b in scene.blocks if b.color is color and _lone(scene, b.id)]
        if len(lone_blocks) < 2:
            return _unstack_action(scene, atom.block)
        return Action(
            pick=_ref(scene, lone_blocks[1]),
            place=PlaceTarget.on_object(_ref(scene, lone_blocks[0])),
        )
    main = stacks[0]
    if atom.block in main:
        # Satisfied except for a rival same-color stack: dismantle the rival.
        rival = stacks[1]
        return Action(pick=_ref(scene, rival[-1]), place=PlaceTarget.on_object(_ref(scene, main[-1])))
    mover = atom.block if not scene.is_occluded(atom.block) else stack_of(scene, atom.block)[-1]
    return Action(pick=_ref(scene, mover), place=PlaceTarget.on_object(_ref(scene, main[-1])))


#: Canonical staging row and spacing for the straight-line task.
LINE_STAGING_REGION = Region.CENTER_LEFT
LINE_SPACING = 0.10
_LINE_POS_TOL = 0.005


def _fix_collinear(atom: GoalAtom, scene: Scene, cand) -> Action:
    ids = sorted(atom.members)
    anchor = scene.get(ids[0])
    if scene.is_occluded(ids[0]):
        return _unstack_action(scene, ids[0])
    if region_of(anchor.pose) is not LINE_STAGING_REGION:
        return Action(pick=_ref(scene, ids[0]), place=PlaceTarget.in_region(LINE_STAGING_REGION))
    for k in range(1, len(ids)):
        b = scene.get(ids[k])
        expected_x = anchor.pose.x + LINE_SPACING * k
        if abs(b.pose.x - expected_x) > _LINE_POS_TOL or abs(b.pose.y - anchor.pose.y) > _LINE_POS_TOL:
            if scene.is_occluded(ids[k]):
                return _unstack_action(scene, ids[k])
            return Action(
                pick=_ref(scene, ids[k]),
                place=PlaceTarget.relative(_ref(scene, ids[k - 1]), "right_of"),
            )
    raise StuckError("line complete but collinearity atom unsatisfied")


_FIXERS = {
    "in_bowl": _fix_in_bowl,
    "in_mismatched_bowl": _fix_in_mismatched_bowl,
    "on_object": _fix_on_object,
    "bigger_beneath": _fix_on_object,
    "in_region": _fix_in_region,
    "in_zone": _fix_in_zone,
    "single_stack": _fix_single_stack,
    "stacked_among": _fix_stacked_among,
    "level_color": _fix_level_color,
    "stacked_with_color": _fix_stacked_with_color,
    "collinear": _fix_collinear,
}


def plan_next(scene: Scene, goal: GoalSpec) -> Action | None:
    """Next action toward the goal, or None when some candidate is complete."""
    if goal.is_satisfied(scene):
        return None
    cand = goal.candidates[goal.best_candidate(scene)]
    for atom in cand:
        if not atom.satisfied(scene):
            return _FIXERS[atom.kind](atom, scene, cand)
    return None


def oracle_next_action(scene: Scene, instance: TaskInstance) -> Action | None:
    """Ground-truth next action for an instance (None means done)."""
    return plan_next(scene, instance.goal)


def plan_actions(scene0: Scene, goal: GoalSpec, max_steps: int = 64) -> list[Action] | None:
    """Full unperturbed plan by simulated rollout; None when it cannot finish
    within max_steps (malformed state)."""
    cfg = PerturbConfig.noiseless()
    src = RandomSource(0)
    scene = scene0.copy()
    actions: list[Action] = []
    for k in range(max_steps):
        try:
            action = plan_next(scene, goal)
        except StuckError:
            return None
        if action is None:
            return actions
        scene, outcome = execute_pick_place(scene, action, cfg, src.step_streams(0, k))
        if not outcome.ok:
            return None
        actions.append(action)
    return None


# ---------------------------------------------------------------------------
# Planner adapters for the closed loop
# ---------------------------------------------------------------------------


class PrivilegedPlanner:
    """Marker base: the loop hands these planners the true scene. Only the
    oracle family is privileged; every other planner sees observations."""

    name = "privileged"

    def decide_from_truth(self, scene: Scene, instance: TaskInstance):
        raise NotImplementedError

    def close(self) -> None:
        pass


class OraclePlanner(PrivilegedPlanner):
    """Closed-loop oracle: replans from the true scene every step."""

    name = "oracle"

    def decide_from_truth(self, scene: Scene, instance: TaskInstance):
        from .loop import PlannerDecision

        try:
            action = plan_next(scene, instance.goal)
        except StuckError as e:
            return PlannerDecision.give_up(str(e))
        if action is None:
            return PlannerDecision.done()
        return PlannerDecision.act(action)


class OpenLoopOraclePlanner(PrivilegedPlanner):
    """Ablation oracle: plans once on the initial scene, then executes blindly."""

    name = "oracle-openloop"

    def __init__(self):
        self._plan: list[Action] | None = None
        self._cursor = 0

    def decide_from_truth(self, scene: Scene, instance: TaskInstance):
        from .loop import PlannerDecision

        if self._plan is None:
            self._plan = plan_actions(instance.scene0, instance.goal) or []
            self._cursor = 0
        if self._cursor >= len(self._plan):
            return PlannerDecision.done()
        action = self._plan[self._cursor]
        self._cursor += 1
        return PlannerDecision.act(action)


def oracle_rollout(
    instance: TaskInstance,
    cfg: PerturbConfig,
    source: RandomSource,
    max_steps: int | None = None,
):
    """Closed-loop oracle episode (the demonstration generator)."""
    from .loop import run_closed_loop

    return run_closed_loop(OraclePlanner(), instance, cfg, source, max_steps=max_steps)
