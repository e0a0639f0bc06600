"""Scripted expert: completeness, optimality, determinism, recovery."""

from __future__ import annotations

from collections import deque

import pytest

from conftest import make_block, make_bowl, make_scene, make_zone
from lohosim.oracle import (
    OraclePlanner,
    oracle_next_action,
    oracle_rollout,
    plan_actions,
    plan_next,
)
from lohosim.loop import run_closed_loop
from lohosim.perturb import PerturbConfig, RandomSource
from lohosim.tasks import TaskId, build_goal, sample_instance
from lohosim.world import Color, SizeClass, Support

CFG0 = PerturbConfig.noiseless()


class TestPlanNext:
    def test_done_when_satisfied(self):
        inst = sample_instance(TaskId.B, 0)
        plan = plan_actions(inst.scene0, inst.goal)
        scene = inst.scene0.copy()
        from lohosim.primitives import execute_pick_place

        src = RandomSource(0)
        for k, action in enumerate(plan):
            scene, _ = execute_pick_place(scene, action, CFG0, src.step_streams(0, k))
        assert oracle_next_action(scene, inst) is None

    def test_b_first_atom_is_lowest_id_unplaced(self):
        inst = sample_instance(TaskId.B, 1)
        action = oracle_next_action(inst.scene0, inst)
        first_block = inst.scene0.blocks[0]
        assert action.pick.color is first_block.color
        assert action.place.kind == "in_bowl"
        assert action.place.ref.color is first_block.color

    def test_determinism(self):
        inst = sample_instance(TaskId.H, 3)
        seqs = {tuple(map(repr, plan_actions(inst.scene0, inst.goal))) for _ in range(5)}
        assert len(seqs) == 1

    def test_e_candidate_stickiness(self):
        # With 2 orange blocks already zoned, the oracle keeps the orange
        # candidate (2 satisfied > 0) regardless of candidate order.
        objs = [
            make_zone(0, Color.ORANGE, 0.15, 0.4),
            make_zone(1, Color.RED, 0.5, 0.4),
            make_zone(2, Color.PINK, 0.85, 0.4),
        ]
        oid = 3
        for color, n in ((Color.ORANGE, 4), (Color.RED, 4), (Color.PINK, 3)):
            for i in range(n):
                objs.append(make_block(oid, color, 0.05 + 0.08 * (oid - 3), 0.1))
                oid += 1
        scene = make_scene(*objs)
        goal = build_goal(TaskId.E, scene, {})
        # Move two orange blocks into the orange zone.
        scene.update(3, pose=objs[0].pose, support=Support.table())
        scene.update(4, pose=objs[0].pose, support=Support.table())
        action = plan_next(scene, goal)
        assert action.pick.color is Color.ORANGE
        assert action.place.kind == "in_zone" and action.place.ref.color is Color.ORANGE

    def test_refs_get_ordinals_when_ambiguous(self):
        inst = sample_instance(TaskId.H, 0)
        action = oracle_next_action(inst.scene0, inst)
        # H scenes hold identical twins of each color: the pick must be
        # fully disambiguated.
        from lohosim.world import resolve_reference

        resolved = resolve_reference(inst.scene0, action.pick)
        assert isinstance(resolved, int)


class TestRollout:
    def test_unperturbed_b_five_colors(self):
        inst = sample_instance(TaskId.B, 7)
        rec = oracle_rollout(inst, CFG0, RandomSource(7))
        assert rec.termination == "done"
        assert rec.score == 100.0
        assert len([s for s in rec.steps if s.action]) == inst.min_steps

    def test_certain_drops_recovered_by_convergent_retries(self):
        # Drops only roll on whole transport seconds, and each drop lands the
        # block 0.5 m closer, so even p=1 converges: retries shorten below
        # one second and slip through. The closed loop needs extra actions.
        cfg = PerturbConfig(drop_p_per_sec=1.0, place_sigma_px=0.0)
        inst = sample_instance(TaskId.B, 2)
        rec = oracle_rollout(inst, cfg, RandomSource(2))
        assert rec.termination == "done"
        assert rec.score == 100.0
        assert len([s for s in rec.steps if s.action]) > inst.min_steps

    def test_moderate_drops_are_recovered(self):
        cfg = PerturbConfig(drop_p_per_sec=0.2)
        done = sum(
            oracle_rollout(sample_instance(TaskId.B, s), cfg, RandomSource(100 + s)).termination == "done"
            for s in range(10)
        )
        assert done >= 8

    def test_unperturbed_m_six_blocks(self):
        for seed in range(20):
            inst = sample_instance(TaskId.M, seed)
            n = len(inst.scene0.blocks)
            rec = oracle_rollout(inst, CFG0, RandomSource(seed))
            assert rec.score == 100.0
            assert len([s for s in rec.steps if s.action]) <= n


class TestStuckRecovery:
    def test_occluded_pick_triggers_deconstruction(self):
        # Goal wants red into its bowl, but blue sits on red.
        scene = make_scene(
            make_block(0, Color.RED, 0.2, 0.2),
            make_block(1, Color.BLUE, 0.2, 0.2, support=Support.on(0)),
            make_bowl(2, Color.RED, 0.8, 0.25),
            make_bowl(3, Color.BLUE, 0.8, 0.1),
        )
        goal = build_goal(TaskId.B, scene, {})
        action = plan_next(scene, goal)
        assert action.pick.color is Color.BLUE  # unstack first
        assert action.place.kind == "region"

    def test_full_recovery_completes(self):
        scene = make_scene(
            make_block(0, Color.RED, 0.2, 0.2),
            make_block(1, Color.BLUE, 0.2, 0.2, support=Support.on(0)),
            make_bowl(2, Color.RED, 0.8, 0.25),
            make_bowl(3, Color.BLUE, 0.8, 0.1),
        )
        goal = build_goal(TaskId.B, scene, {})
        plan = plan_actions(scene, goal)
        assert plan is not None
        assert len(plan) == 3  # unstack + two placements


# ---------------------------------------------------------------------------
# Optimality floor against an exhaustive breadth-first search
# ---------------------------------------------------------------------------


def _bfs_plan_length(inst) -> int:
    """Shortest stacking plan over the abstract support graph.

    Covers instances whose atoms are pure support predicates (C, G, H
    shapes): states are parent maps, actions move an unoccluded block onto
    the table or onto an unoccluded block.
    """
    scene = inst.scene0
    blocks = [b.id for b in scene.blocks]
    colors = {b.id: b.color for b in scene.blocks}

    def tops(state: tuple) -> set[int]:
        parents = dict(zip(blocks, state))
        occupied = set(parents.values()) - {None}
        return {b for b in blocks if b not in occupied}

    def satisfied(state: tuple) -> bool:
        parents = dict(zip(blocks, state))

        def chain_from(base):
            chain = [base]
            while True:
                child = next((b for b in blocks if parents[b] == chain[-1]), None)
                if child is None:
                    return chain
                chain.append(child)

        stacks = [chain_from(b) for b in blocks if parents[b] is None]
        stacks = [c for c in stacks if len(c) >= 2]
        for cand in inst.goal.candidates:
            ok = True
            for atom in cand:
                if atom.kind == "on_object":
                    ok = parents[atom.above] == atom.below
                elif atom.kind == "level_color":
                    ok = any(
                        len(c) > atom.level and colors[c[atom.level]] is atom.color
                        for c in stacks
                    )
                elif atom.kind == "true":
                    ok = True
                else:
                    return False  # atom outside the abstract model
                if not ok:
                    break
            if ok:
                return True
        return False

    start = tuple(None for _ in blocks)
    seen = {start}
    frontier = deque([(start, 0)])
    while frontier:
        state, depth = frontier.popleft()
        if satisfied(state):
            return depth
        movable = tops(state)
        for b in movable:
            for target in [None] + sorted(movable - {b}):
                if target is not None:
                    # cannot stack bigger onto smaller (capture rule)
                    sb = scene.get(b).size
                    st = scene.get(target).size
                    if sb is SizeClass.BIGGER and st is SizeClass.SMALLER:
                        continue
                nxt = list(state)
                nxt[blocks.index(b)] = target
                nxt = tuple(nxt)
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append((nxt, depth + 1))
    raise AssertionError("BFS found no plan")


class TestOptimalityFloor:
    @pytest.mark.parametrize("task", [TaskId.C, TaskId.G, TaskId.H])
    def test_plan_length_matches_bfs(self, task):
        checked = 0
        seed = 0
        while checked < 4 and seed < 40:
            inst = sample_instance(task, seed)
            seed += 1
            if inst.goal.atom_count > 4:
                continue
            assert inst.min_steps == _bfs_plan_length(inst), (task, seed - 1)
            checked += 1
        assert checked == 4


class TestOpenLoop:
    def test_open_loop_matches_closed_when_unperturbed(self):
        from lohosim.oracle import OpenLoopOraclePlanner

        inst = sample_instance(TaskId.J, 4)
        closed = run_closed_loop(OraclePlanner(), inst, CFG0, RandomSource(4))
        opened = run_closed_loop(OpenLoopOraclePlanner(), inst, CFG0, RandomSource(4))
        assert closed.score == opened.score == 100.0

    def test_open_loop_does_not_retry_drops(self):
        from lohosim.oracle import OpenLoopOraclePlanner

        cfg = PerturbConfig(drop_p_per_sec=1.0, place_sigma_px=0.0)
        inst = sample_instance(TaskId.B, 9)
        rec = run_closed_loop(OpenLoopOraclePlanner(), inst, cfg, RandomSource(9))
        assert rec.termination == "done"  # plan exhausted, then done
        # every block is moved exactly once; most drops miss their bowls
        assert len([s for s in rec.steps if s.action]) == inst.min_steps
        assert rec.score < 100.0
