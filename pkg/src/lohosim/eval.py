"""Match predicates, partial scoring, benchmark running, dataset generation.

Scoring is final-state, atom-based partial credit: one atom corresponds to
one oracle step by construction, so "8 of 10 atoms" scores 80 exactly.
Benchmark runs reduce episode results in deterministic (task, seed) order
regardless of execution order or parallelism.
"""

from __future__ import annotations

import hashlib
import json
import math
import shutil
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import oracle as oracle_mod
from . import tasks as tasks_mod
from . import world
from .lang import ZONE_MATCH_THRESHOLD
from .loop import EpisodeRecord, RulePlanner, external_bridge, run_closed_loop
from .oracle import OpenLoopOraclePlanner, OraclePlanner
from .perturb import PerturbConfig, RandomSource, derive_seed
from .tasks import TaskId, TaskInstance, TASKS, sample_instance
from .world import Pose, SceneObject

POSE_TRANS_TOL = 0.02
POSE_ROT_TOL = math.pi / 12.0
CUBE_SYMMETRY = math.pi / 2.0

MANIFEST_SCHEMA = "dataset/1"
DEFAULT_SPLITS = {"train": 1000, "val": 200, "test": 200}
#: Seed bases keep split seed ranges disjoint by construction.
SPLIT_SEED_BASES = {"train": 0, "val": 1_000_000, "test": 2_000_000}


def pose_match(
    a: Pose,
    b: Pose,
    trans_tol: float = POSE_TRANS_TOL,
    rot_tol: float = POSE_ROT_TOL,
    symmetry: float = CUBE_SYMMETRY,
) -> bool:
    """Position within trans_tol and rotation within rot_tol modulo symmetry."""
    if a.distance(b) > trans_tol:
        return False
    d = math.fmod(abs(a.theta - b.theta), symmetry)
    return min(d, symmetry - d) <= rot_tol


def zone_match(obj: SceneObject, zone: SceneObject, threshold: float = ZONE_MATCH_THRESHOLD) -> bool:
    """Footprint overlap with the zone meets the threshold fraction."""
    return world.footprint_overlap(obj, zone) >= threshold


def score_final(scene: world.Scene, instance: TaskInstance) -> float:
    """Final-state score in [0, 100]: best candidate's satisfied-atom fraction."""
    return instance.goal.score(scene)


# ---------------------------------------------------------------------------
# Benchmark running
# ---------------------------------------------------------------------------


def make_planner_factory(spec):
    """Planner factory from a spec string: oracle | oracle-openloop | rule |
    extern:CMD | tcp:HOST:PORT. One planner instance per episode. A callable
    passes through as the factory itself."""
    if callable(spec):
        return spec
    if spec == "oracle":
        return OraclePlanner
    if spec == "oracle-openloop":
        return OpenLoopOraclePlanner
    if spec == "rule":
        return RulePlanner
    if spec.startswith(("extern:", "tcp:")):
        return lambda: external_bridge(spec)
    raise ValueError(f"unknown planner spec {spec!r}")


@dataclass(frozen=True)
class TaskResult:
    task: str
    name: str
    split: str
    n: int
    mean: float
    std: float
    failures: int  # episodes that ended in give_up or planner_error_limit


@dataclass
class ResultTable:
    planner: str
    episodes_per_task: int
    base_seed: int
    config: PerturbConfig
    rows: list[TaskResult] = field(default_factory=list)

    def to_text(self) -> str:
        header = f"{'task':<5} {'name':<78} {'split':<9} {'n':>4} {'mean':>7} {'std':>7}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.task:<5} {r.name:<78} {r.split:<9} {r.n:>4} {r.mean:>7.2f} {r.std:>7.2f}"
            )
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["task_id,task_name,split,n,mean,std"]
        for r in self.rows:
            name = '"' + r.name.replace('"', '""') + '"'
            lines.append(f"{r.task},{name},{r.split},{r.n},{r.mean:.4f},{r.std:.4f}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {
                "planner": self.planner,
                "episodes_per_task": self.episodes_per_task,
                "base_seed": self.base_seed,
                "config": self.config.to_dict(),
                "rows": [
                    {
                        "task_id": r.task,
                        "task_name": r.name,
                        "split": r.split,
                        "n": r.n,
                        "mean": round(r.mean, 4),
                        "std": round(r.std, 4),
                        "failures": r.failures,
                    }
                    for r in self.rows
                ],
            },
            indent=2,
        ) + "\n"


def episode_seed_for(base_seed: int, task: TaskId, seed: int) -> int:
    return derive_seed(base_seed, task.value, seed)


def run_episode(
    planner_factory,
    task: TaskId,
    seed: int,
    cfg: PerturbConfig,
    base_seed: int,
    max_steps: int | None = None,
) -> EpisodeRecord:
    instance = sample_instance(task, seed)
    planner = planner_factory()
    try:
        return run_closed_loop(
            planner,
            instance,
            cfg,
            RandomSource(episode_seed_for(base_seed, task, seed)),
            max_steps=max_steps,
            episode_id=f"{task.value}-{seed}",
        )
    finally:
        planner.close()


def run_benchmark(
    planner_spec: str,
    task_set: list[TaskId],
    episodes_per_task: int,
    base_seed: int,
    cfg: PerturbConfig,
    jobs: int = 1,
    max_steps: int | None = None,
) -> tuple[ResultTable, list[EpisodeRecord]]:
    """Run episodes over seeds base..base+n-1 for each task; per-episode
    failures (give-ups, protocol errors) are recorded, never fatal."""
    factory = make_planner_factory(planner_spec)
    jobs_order = [(task, base_seed + i) for task in task_set for i in range(episodes_per_task)]

    def one(args) -> EpisodeRecord:
        task, seed = args
        return run_episode(factory, task, seed, cfg, base_seed, max_steps=max_steps)

    if jobs <= 1:
        records = [one(a) for a in jobs_order]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(one, jobs_order))

    spec_name = planner_spec if isinstance(planner_spec, str) else getattr(planner_spec, "name", repr(planner_spec))
    table = ResultTable(
        planner=spec_name, episodes_per_task=episodes_per_task, base_seed=base_seed, config=cfg
    )
    by_task: dict[TaskId, list[EpisodeRecord]] = {t: [] for t in task_set}
    for (task, _), rec in zip(jobs_order, records):
        by_task[task].append(rec)
    for task in task_set:
        scores = [r.score for r in by_task[task]]
        mean = sum(scores) / len(scores)
        var = sum((s - mean) ** 2 for s in scores) / len(scores)
        failures = sum(1 for r in by_task[task] if r.termination in ("give_up", "planner_error_limit"))
        meta = TASKS[task]
        table.rows.append(
            TaskResult(task.value, meta.name, meta.split, len(scores), mean, math.sqrt(var), failures)
        )
    return table, records


def resolve_task_set(spec: str) -> list[TaskId]:
    """Task set spec: seen | unseen | extended | all | comma-separated ids."""
    if spec == "seen":
        return list(tasks_mod.SEEN_TASKS)
    if spec == "unseen":
        return list(tasks_mod.UNSEEN_TASKS)
    if spec == "extended":
        return list(tasks_mod.EXTENDED_TASKS)
    if spec == "all":
        return list(TaskId)
    return [TaskId(part.strip().upper()) for part in spec.split(",") if part.strip()]


# ---------------------------------------------------------------------------
# Dataset generation
# ---------------------------------------------------------------------------


def generate_dataset(
    task_set: list[TaskId],
    out_dir: str | Path,
    splits: dict[str, int] | None = None,
    seed_base: int = 0,
    cfg: PerturbConfig | None = None,
) -> Path:
    """Write TaskInstance files plus one oracle demonstration per instance,
    with disjoint per-split seed ranges and a manifest of counts and content
    hashes. On failure, partial output is removed."""
    splits = dict(DEFAULT_SPLITS if splits is None else splits)
    cfg = cfg or PerturbConfig.noiseless()
    out = Path(out_dir)
    created_root = not out.exists()
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    manifest: dict = {
        "schema": MANIFEST_SCHEMA,
        "seed_base": seed_base,
        "tasks": {},
    }
    try:
        for task in task_set:
            task_dir = out / task.value
            task_dir.mkdir(exist_ok=True)
            task_entry: dict = {"splits": {}, "files": {}}
            for split, count in splits.items():
                base = seed_base + SPLIT_SEED_BASES[split]
                seeds = list(range(base, base + count))
                task_entry["splits"][split] = {
                    "count": count,
                    "seed_start": base,
                    "seed_end": base + count - 1,
                }
                for seed in seeds:
                    instance = sample_instance(task, seed)
                    demo = oracle_mod.oracle_rollout(
                        instance, cfg, RandomSource(episode_seed_for(seed_base, task, seed))
                    )
                    ipath = task_dir / f"{split}_{seed}_instance.json"
                    epath = task_dir / f"{split}_{seed}_demo.jsonl"
                    ipath.write_text(instance.to_json() + "\n", encoding="utf-8")
                    epath.write_text(demo.to_jsonl(), encoding="utf-8")
                    written.extend([ipath, epath])
                    for p in (ipath, epath):
                        digest = hashlib.sha256(p.read_bytes()).hexdigest()
                        task_entry["files"][p.relative_to(out).as_posix()] = digest
            manifest["tasks"][task.value] = task_entry
        manifest_path = out / "manifest.json"
        manifest_path.write_text(
            json.dumps(manifest, separators=(",", ":"), sort_keys=True) + "\n", encoding="utf-8"
        )
        return manifest_path
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        if created_root:
            shutil.rmtree(out, ignore_errors=True)
        raise
