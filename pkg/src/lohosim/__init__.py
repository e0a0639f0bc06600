"""Deterministic tabletop pick-and-place simulator and long-horizon
language-conditioned planning benchmark."""

from .eval import pose_match, run_benchmark, score_final, zone_match
from .lang import describe_outcome, describe_scene, parse_instruction, render_instruction
from .loop import EpisodeRecord, FeedbackPacket, PlannerDecision, RulePlanner, run_closed_loop
from .oracle import OpenLoopOraclePlanner, OraclePlanner, oracle_next_action, oracle_rollout
from .perturb import PerturbConfig, RandomSource, perturb_observation, perturb_place, roll_drop, roll_topple
from .primitives import Action, ExecutionOutcome, PlaceTarget, execute_pick_place, oracle_place_pose
from .tasks import GoalAtom, GoalSpec, TaskId, TaskInstance, build_goal, is_goal_satisfied, sample_instance
from .world import (
    Color,
    Kind,
    ObjectRef,
    Pose,
    Region,
    Scene,
    SceneObject,
    SizeClass,
    footprint_overlap,
    region_of,
    resolve_reference,
    stack_of,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "Color",
    "EpisodeRecord",
    "ExecutionOutcome",
    "FeedbackPacket",
    "GoalAtom",
    "GoalSpec",
    "Kind",
    "ObjectRef",
    "OpenLoopOraclePlanner",
    "OraclePlanner",
    "PerturbConfig",
    "PlaceTarget",
    "PlannerDecision",
    "Pose",
    "RandomSource",
    "Region",
    "RulePlanner",
    "Scene",
    "SceneObject",
    "SizeClass",
    "TaskId",
    "TaskInstance",
    "build_goal",
    "describe_outcome",
    "describe_scene",
    "execute_pick_place",
    "footprint_overlap",
    "is_goal_satisfied",
    "oracle_next_action",
    "oracle_place_pose",
    "oracle_rollout",
    "parse_instruction",
    "perturb_observation",
    "perturb_place",
    "pose_match",
    "region_of",
    "render_instruction",
    "resolve_reference",
    "roll_drop",
    "roll_topple",
    "run_benchmark",
    "run_closed_loop",
    "sample_instance",
    "score_final",
    "stack_of",
    "zone_match",
    "__version__",
]
