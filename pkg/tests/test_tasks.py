"""Task samplers and goal machinery."""

from __future__ import annotations

import numpy as np

from conftest import make_block, make_bowl, make_scene, make_zone
from lohosim.tasks import (
    EXTENDED_TASKS,
    SEEN_TASKS,
    TASKS,
    UNSEEN_TASKS,
    GoalAtom,
    TaskId,
    TaskInstance,
    build_goal,
    even_count_colors,
    identify_task,
    is_goal_satisfied,
    sample_instance,
)
from lohosim.world import Color, SizeClass, Support, region_of

ALL_TASKS = list(TaskId)


class TestRegistry:
    def test_thirteen_tasks(self):
        assert len(ALL_TASKS) == 13

    def test_splits(self):
        assert set(SEEN_TASKS) == {TaskId.A, TaskId.B, TaskId.C, TaskId.D, TaskId.E}
        assert set(UNSEEN_TASKS) == {TaskId.F, TaskId.G, TaskId.H, TaskId.I, TaskId.J, TaskId.K}
        assert set(EXTENDED_TASKS) == {TaskId.L, TaskId.M}


class TestSamplers:
    def test_deterministic_byte_identical(self):
        for task in ALL_TASKS:
            a = sample_instance(task, 3).to_json()
            b = sample_instance(task, 3).to_json()
            assert a == b, task

    def test_different_seeds_differ(self):
        assert sample_instance(TaskId.B, 0).to_json() != sample_instance(TaskId.B, 1).to_json()

    def test_b_blocks_bijective_with_bowls(self):
        for seed in range(20):
            inst = sample_instance(TaskId.B, seed)
            blocks = inst.scene0.blocks
            bowls = inst.scene0.bowls
            assert len(blocks) == len(bowls)
            assert {b.color for b in blocks} == {w.color for w in bowls}
            assert len({b.color for b in blocks}) == len(blocks)
            assert 5 <= len(blocks) <= 7

    def test_j_blocks_start_in_source_region(self):
        # Predicate check over 100 seeds.
        for seed in range(100):
            inst = sample_instance(TaskId.J, seed)
            _, params = identify_task(inst.instruction)
            for b in inst.scene0.blocks:
                assert region_of(b.pose) is params["source"], (seed, b)

    def test_d_blocks_start_outside_target(self):
        for seed in range(30):
            inst = sample_instance(TaskId.D, seed)
            _, params = identify_task(inst.instruction)
            for b in inst.scene0.blocks:
                assert region_of(b.pose) is not params["region"]

    def test_c_has_size_pairs_per_color(self):
        for seed in range(20):
            inst = sample_instance(TaskId.C, seed)
            colors = {b.color for b in inst.scene0.blocks}
            assert 3 <= len(colors) <= 5
            for c in colors:
                sizes = sorted(b.size.value for b in inst.scene0.blocks if b.color is c)
                assert sizes == ["bigger", "smaller"]

    def test_e_counts_and_zones(self):
        for seed in range(20):
            inst = sample_instance(TaskId.E, seed)
            counts: dict[Color, int] = {}
            for b in inst.scene0.blocks:
                counts[b.color] = counts.get(b.color, 0) + 1
            assert len(counts) == 3
            evens = [c for c, n in counts.items() if n % 2 == 0]
            assert evens, counts
            zone_colors = {z.color for z in inst.scene0.zones}
            assert set(counts) == zone_colors

    def test_h_equal_counts_two_colors(self):
        for seed in range(20):
            inst = sample_instance(TaskId.H, seed)
            counts: dict[Color, int] = {}
            for b in inst.scene0.blocks:
                counts[b.color] = counts.get(b.color, 0) + 1
            assert len(counts) == 2
            a, b = counts.values()
            assert a == b and 2 <= a <= 4

    def test_k_has_a_triple_color(self):
        for seed in range(20):
            inst = sample_instance(TaskId.K, seed)
            counts: dict[Color, int] = {}
            for b in inst.scene0.blocks:
                counts[b.color] = counts.get(b.color, 0) + 1
            assert max(counts.values()) >= 3
            assert all(2 <= n <= 4 for n in counts.values())

    def test_m_center_row_left_free(self):
        for seed in range(30):
            inst = sample_instance(TaskId.M, seed)
            for b in inst.scene0.blocks:
                assert region_of(b.pose).row in ("top", "bottom")

    def test_scene0_satisfies_zero_atoms(self):
        # A planner that immediately quits must score 0 on every sampler.
        for task in ALL_TASKS:
            for seed in range(10):
                inst = sample_instance(task, seed)
                assert max(inst.goal.satisfied_counts(inst.scene0)) == 0, (task, seed)
                assert not is_goal_satisfied(inst.scene0, inst)

    def test_spawn_separation_holds(self):
        for task in ALL_TASKS:
            inst = sample_instance(task, 5)
            inst.scene0.validate(spawn=True)

    def test_min_steps_floors(self):
        for task in ALL_TASKS:
            floor = TASKS[task].min_steps_floor
            for seed in range(10):
                inst = sample_instance(task, seed)
                assert inst.min_steps >= floor, (task, seed, inst.min_steps)


class TestGoalBuilders:
    def test_b_matching_pairs(self):
        scene = make_scene(
            make_block(0, Color.RED, 0.1, 0.1), make_block(1, Color.BLUE, 0.2, 0.3),
            make_bowl(2, Color.RED, 0.8, 0.1), make_bowl(3, Color.BLUE, 0.8, 0.4),
        )
        goal = build_goal(TaskId.B, scene, {})
        assert goal.candidates == (
            (
                GoalAtom(kind="in_bowl", block=0, bowl=2),
                GoalAtom(kind="in_bowl", block=1, bowl=3),
            ),
        )

    def test_h_two_candidates_four_levels(self):
        scene = make_scene(
            make_block(0, Color.RED, 0.1, 0.1), make_block(1, Color.RED, 0.3, 0.1),
            make_block(2, Color.BLUE, 0.5, 0.1), make_block(3, Color.BLUE, 0.7, 0.1),
        )
        goal = build_goal(TaskId.H, scene, {})
        assert len(goal.candidates) == 2
        assert all(len(c) == 4 for c in goal.candidates)
        first = goal.candidates[0]
        assert [a.color for a in first] == [Color.BLUE, Color.RED, Color.BLUE, Color.RED]

    def test_e_admissible_colors_from_counts(self):
        # Fig-1 configuration: 4x orange, 4x red, 3x pink.
        objs = []
        oid = 0
        for color, n in ((Color.ORANGE, 4), (Color.RED, 4), (Color.PINK, 3)):
            objs.append(make_zone(oid, color, 0.1 + 0.25 * oid, 0.4))
            oid += 1
        xs = iter(np.linspace(0.05, 0.95, 11))
        for color, n in ((Color.ORANGE, 4), (Color.RED, 4), (Color.PINK, 3)):
            for _ in range(n):
                objs.append(make_block(oid, color, float(next(xs)), 0.1))
                oid += 1
        scene = make_scene(*objs)
        assert even_count_colors(scene) == [Color.RED, Color.ORANGE]
        goal = build_goal(TaskId.E, scene, {})
        cand_colors = {scene.get(c[0].block).color for c in goal.candidates}
        assert cand_colors == {Color.ORANGE, Color.RED}

    def test_candidates_share_atom_count(self):
        for task in ALL_TASKS:
            for seed in range(5):
                goal = sample_instance(task, seed).goal
                widths = {len(c) for c in goal.candidates}
                assert len(widths) == 1

    def test_g_candidates_enumerate_orders(self):
        scene = make_scene(
            make_block(0, Color.RED, 0.1, 0.1, SizeClass.SMALLER),
            make_block(1, Color.BLUE, 0.3, 0.1, SizeClass.SMALLER),
            make_block(2, Color.GREEN, 0.5, 0.1, SizeClass.BIGGER),
            make_block(3, Color.YELLOW, 0.7, 0.1, SizeClass.BIGGER),
            make_block(4, Color.PINK, 0.9, 0.1, SizeClass.BIGGER),
        )
        goal = build_goal(TaskId.G, scene, {})
        # 2! orders for the smaller pair x 3! for the bigger triple.
        assert len(goal.candidates) == 12

    def test_m_collinear_line_at_spacing(self):
        # Five blocks in a straight line at 0.06 m spacing satisfy the goal;
        # cross-check the decision against an independent least-squares fit.
        blocks = [make_block(i, Color.RED, 0.2 + 0.06 * i, 0.25) for i in range(5)]
        scene = make_scene(*blocks)
        goal = build_goal(TaskId.M, scene, {})
        assert goal.is_satisfied(scene)

        pts = np.array([[b.pose.x, b.pose.y] for b in blocks])
        A = np.c_[pts[:, 0], np.ones(len(pts))]
        coef, *_ = np.linalg.lstsq(A, pts[:, 1], rcond=None)
        residuals = pts[:, 1] - A @ coef
        assert np.max(np.abs(residuals)) <= 0.01

    def test_m_bent_line_rejected(self):
        blocks = [make_block(i, Color.RED, 0.2 + 0.06 * i, 0.25) for i in range(4)]
        blocks.append(make_block(4, Color.RED, 0.2 + 0.24, 0.30))  # kinked end
        scene = make_scene(*blocks)
        goal = build_goal(TaskId.M, scene, {})
        assert not goal.is_satisfied(scene)

    def test_m_gap_limit(self):
        blocks = [
            make_block(0, Color.RED, 0.10, 0.25),
            make_block(1, Color.RED, 0.20, 0.25),
            make_block(2, Color.RED, 0.45, 0.25),  # 0.21 m edge gap to neighbor
        ]
        scene = make_scene(*blocks)
        goal = build_goal(TaskId.M, scene, {})
        assert not goal.is_satisfied(scene)

    def test_i_atom_layout(self):
        scene = make_scene(
            make_zone(0, Color.RED, 0.2, 0.4),
            make_block(1, Color.RED, 0.5, 0.1, SizeClass.SMALLER),
            make_block(2, Color.RED, 0.7, 0.1, SizeClass.BIGGER),
        )
        goal = build_goal(TaskId.I, scene, {})
        kinds = [a.kind for a in goal.candidates[0]]
        assert kinds == ["in_zone", "on_object", "bigger_beneath"]

    def test_f_mismatch_atoms(self):
        scene = make_scene(
            make_block(0, Color.RED, 0.1, 0.1), make_bowl(1, Color.RED, 0.8, 0.1),
            make_block(2, Color.BLUE, 0.2, 0.3), make_bowl(3, Color.BLUE, 0.8, 0.4),
        )
        goal = build_goal(TaskId.F, scene, {})
        # Put red into the blue bowl: mismatched, satisfied.
        scene.update(0, support=Support.in_bowl(3), pose=scene.get(3).pose)
        assert goal.satisfied_counts(scene) == [1]
        # Move it to the red bowl: matched, not satisfied.
        scene.update(0, support=Support.in_bowl(1), pose=scene.get(1).pose)
        assert goal.satisfied_counts(scene) == [0]


class TestAtoms:
    def test_single_stack_requires_exactly_members(self):
        scene = make_scene(
            make_block(0, Color.RED, 0.2, 0.2),
            make_block(1, Color.BLUE, 0.2, 0.2, support=Support.on(0)),
            make_block(2, Color.GREEN, 0.2, 0.2, support=Support.on(1)),
            make_block(3, Color.PINK, 0.7, 0.2),
        )
        assert GoalAtom(kind="single_stack", members=(0, 1, 2)).satisfied(scene)
        assert not GoalAtom(kind="single_stack", members=(0, 1)).satisfied(scene)
        assert not GoalAtom(kind="single_stack", members=(0, 1, 2, 3)).satisfied(scene)

    def test_stacked_with_color_uniqueness(self):
        scene = make_scene(
            make_block(0, Color.RED, 0.2, 0.2),
            make_block(1, Color.RED, 0.2, 0.2, support=Support.on(0)),
            make_block(2, Color.RED, 0.6, 0.2),
            make_block(3, Color.RED, 0.6, 0.2, support=Support.on(2)),
        )
        # Two rival red stacks: membership does not count.
        atom = GoalAtom(kind="stacked_with_color", block=0, color=Color.RED)
        assert not atom.satisfied(scene)
        # Merge into one stack.
        scene.update(2, support=Support.on(1), pose=scene.get(1).pose)
        scene.update(3, support=Support.on(2), pose=scene.get(2).pose)
        assert atom.satisfied(scene)

    def test_level_color_needs_a_real_stack(self):
        scene = make_scene(make_block(0, Color.RED, 0.2, 0.2))
        assert not GoalAtom(kind="level_color", level=0, color=Color.RED).satisfied(scene)

    def test_bigger_beneath(self):
        scene = make_scene(
            make_block(0, Color.RED, 0.2, 0.2, SizeClass.BIGGER),
            make_block(1, Color.RED, 0.2, 0.2, SizeClass.SMALLER, support=Support.on(0)),
        )
        assert GoalAtom(kind="bigger_beneath", above=1, below=0).satisfied(scene)
        assert not GoalAtom(kind="bigger_beneath", above=0, below=1).satisfied(scene)


class TestInstanceSerialization:
    def test_round_trip_all_tasks(self):
        for task in ALL_TASKS:
            inst = sample_instance(task, 2)
            back = TaskInstance.from_json(inst.to_json())
            assert back.to_json() == inst.to_json()
            assert back.goal.candidates == inst.goal.candidates

    def test_identify_matches_sampled_instructions(self):
        for task in ALL_TASKS:
            inst = sample_instance(task, 4)
            ident = identify_task(inst.instruction)
            assert ident is not None
            assert ident[0] is task

    def test_unknown_instruction(self):
        assert identify_task("assemble the furniture") is None
