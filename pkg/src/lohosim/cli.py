"""Operator command line: dataset generation, benchmark runs, replay,
rendering, task listing.

Exit codes: 0 success, 1 verification or evaluation failure, 2 usage or
configuration error. LOHOSIM_SEED overrides --seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import eval as eval_mod
from . import loop as loop_mod
from . import tasks as tasks_mod
from .lang import TEMPLATE_VERSION
from .perturb import PerturbConfig
from .render_svg import render_scene_svg
from .tasks import TASKS, TaskId, sample_instance


def _parse_perturb(spec: str | None, config_file: str | None) -> PerturbConfig:
    values: dict = {}
    if config_file:
        with open(config_file, "r", encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ValueError("perturbation config file must hold a JSON object")
        values.update(loaded)
    if spec:
        for item in spec.split(","):
            item = item.strip()
            if not item:
                continue
            if "=" not in item:
                raise ValueError(f"perturbation flag {item!r} is not key=value")
            key, value = item.split("=", 1)
            values[key.strip()] = value.strip()
    return PerturbConfig.from_dict(values)


def _seed_from(args) -> int:
    env = os.environ.get("LOHOSIM_SEED")
    if env is not None:
        return int(env)
    return args.seed


def cmd_list_tasks(args) -> int:
    header = f"{'id':<4} {'name':<94} {'split':<18} {'min':>4}  sampler"
    print(header)
    print("-" * len(header))
    for task in TaskId:
        meta = TASKS[task]
        split = meta.split
        if split == "extended":
            split = "appendix-extended"
        print(f"{task.value:<4} {meta.name:<94} {split:<18} {meta.min_steps_floor:>4}  {meta.summary}")
    return 0


def cmd_gen(args) -> int:
    task_set = eval_mod.resolve_task_set(args.task)
    if args.splits:
        counts = [int(v) for v in args.splits.split(",")]
        if len(counts) != 3:
            raise ValueError("--splits needs three comma-separated counts")
        splits = {"train": counts[0], "val": counts[1], "test": counts[2]}
    else:
        splits = None
    manifest = eval_mod.generate_dataset(
        task_set, args.out, splits=splits, seed_base=args.seed_base
    )
    print(manifest)
    return 0


def cmd_eval(args) -> int:
    cfg = _parse_perturb(args.perturb, args.perturb_config)
    task_set = eval_mod.resolve_task_set(args.tasks)
    table, records = eval_mod.run_benchmark(
        args.planner,
        task_set,
        args.episodes,
        _seed_from(args),
        cfg,
        jobs=args.jobs,
        max_steps=args.max_steps,
    )
    sys.stdout.write(table.to_text())
    if args.report:
        path = Path(args.report)
        if path.suffix == ".json":
            path.write_text(table.to_json(), encoding="utf-8")
        elif path.suffix == ".csv":
            path.write_text(table.to_csv(), encoding="utf-8")
        else:
            path.write_text(table.to_text(), encoding="utf-8")
    if args.records:
        with open(args.records, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(rec.to_jsonl())
    failures = sum(r.failures for r in table.rows)
    if failures:
        print(f"note: {failures} episodes ended in give_up/planner_error_limit", file=sys.stderr)
    return 0


def _scene_for_render(args):
    if args.instance:
        instance = tasks_mod.TaskInstance.from_json(Path(args.instance).read_text(encoding="utf-8"))
        return instance.scene0
    record = loop_mod.EpisodeRecord.from_jsonl(Path(args.episode).read_text(encoding="utf-8"))
    instance = sample_instance(TaskId(record.task), record.seed)
    scene = instance.scene0.copy()
    if args.step < 0:
        return scene
    source = loop_mod.RandomSource(record.episode_seed)
    from .primitives import execute_pick_place

    for s in record.steps:
        if s.step > args.step:
            break
        if s.action is not None:
            scene, _ = execute_pick_place(scene, s.action, record.config, source.step_streams(0, s.step))
    return scene


def cmd_render(args) -> int:
    try:
        scene = _scene_for_render(args)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    svg = render_scene_svg(scene)
    Path(args.out).write_text(svg, encoding="utf-8")
    print(args.out)
    return 0


def cmd_replay(args) -> int:
    try:
        text = Path(args.episode).read_text(encoding="utf-8")
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    try:
        record = loop_mod.EpisodeRecord.from_jsonl(text)
    except ValueError as e:
        print(f"verification failed: {e}", file=sys.stderr)
        return 1
    if record.template_version != TEMPLATE_VERSION:
        print(
            f"warning: record template version {record.template_version} != "
            f"current {TEMPLATE_VERSION}",
            file=sys.stderr,
        )
    result = loop_mod.replay_episode(record, verify=args.verify)
    if args.verify and not result.ok:
        print(f"verification failed at step {result.first_divergence}: {result.detail}", file=sys.stderr)
        return 1
    print(
        f"replayed task {record.task} seed {record.seed}: {len(record.steps)} steps, "
        f"termination {record.termination}, score {record.score:g}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lohosim",
        description="Deterministic tabletop pick-and-place benchmark harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-tasks", help="print the task registry")
    p.set_defaults(func=cmd_list_tasks)

    p = sub.add_parser("gen", help="generate instances plus oracle demonstrations")
    p.add_argument("--task", default="all", help="task id, comma list, seen|unseen|extended|all")
    p.add_argument("--splits", default=None, help="train,val,test counts (default 1000,200,200)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed-base", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("eval", help="run a benchmark")
    p.add_argument("--planner", required=True,
                   help="oracle | oracle-openloop | rule | extern:CMD | tcp:HOST:PORT")
    p.add_argument("--tasks", default="all", help="seen|unseen|extended|all or comma list")
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb", default=None,
                   help="k=v list: place_sigma_px,obs_sigma_px,drop_p,topple,px_to_m,speed")
    p.add_argument("--perturb-config", default=None, help="JSON file with the same keys")
    p.add_argument("--report", default=None, help="write the table (.csv/.json/.txt by suffix)")
    p.add_argument("--records", default=None, help="write all episode records (JSONL)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--max-steps", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="render a scene to SVG")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--instance", help="TaskInstance JSON file")
    group.add_argument("--episode", help="episode record JSONL file")
    p.add_argument("--step", type=int, default=-1, help="replay up to this step (episodes)")
    p.add_argument("--out", required=True, help="output .svg path")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("replay", help="re-execute a recorded episode")
    p.add_argument("--episode", required=True)
    p.add_argument("--verify", action="store_true", help="check every scene digest")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
