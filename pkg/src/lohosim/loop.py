"""The Planner-Actor-Reporter closed loop.

Each step: perceive (observation noise), report (captions plus a structured
view of the same perceived scene), plan, parse textual decisions, execute on
the true scene, append to the episode record. Planners never see the true
scene; only the oracle family (PrivilegedPlanner) does, via a separate code
path. Episode records chain per-step scene digests and carry a whole-record
checksum, so replays are tamper-evident.
"""

from __future__ import annotations

import hashlib
import json
import shlex
import socket
import subprocess
import threading
import queue
from dataclasses import dataclass, field

from . import lang, tasks, world
from .lang import TEMPLATE_VERSION, describe_outcome, describe_scene, parse_instruction
from .oracle import PrivilegedPlanner, plan_next
from .perturb import PerturbConfig, RandomSource, perturb_observation
from .primitives import Action, ExecutionOutcome, PlaceTarget, execute_pick_place
from .tasks import TaskInstance, build_goal, identify_task
from .world import ObjectRef, Scene

PROTOCOL_VERSION = 1
EPISODE_SCHEMA = "episode/1"

#: Consecutive unparseable planner decisions that end an episode.
PLANNER_ERROR_LIMIT = 3
#: Default cap on executed actions, as a multiple of the oracle plan length.
MAX_STEPS_FACTOR = 3
#: Seconds an external planner gets to answer one feedback message.
BRIDGE_TIMEOUT = 60.0


# ---------------------------------------------------------------------------
# Decisions and feedback
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlannerDecision:
    kind: str  # "act_text" | "act" | "done" | "giveup" | "error"
    text: str | None = None
    action: Action | None = None
    reason: str | None = None

    @classmethod
    def act(cls, action: Action) -> "PlannerDecision":
        return cls("act", action=action)

    @classmethod
    def act_text(cls, text: str) -> "PlannerDecision":
        return cls("act_text", text=text)

    @classmethod
    def done(cls) -> "PlannerDecision":
        return cls("done")

    @classmethod
    def give_up(cls, reason: str) -> "PlannerDecision":
        return cls("giveup", reason=reason)

    @classmethod
    def error(cls, reason: str) -> "PlannerDecision":
        """A malformed or undeliverable decision; counts toward the error limit."""
        return cls("error", reason=reason)

    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.text is not None:
            d["text"] = self.text
        if self.action is not None:
            d["action"] = _action_to_dict(self.action)
        if self.reason is not None:
            d["reason"] = self.reason
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PlannerDecision":
        return cls(
            kind=d["kind"],
            text=d.get("text"),
            action=_action_from_dict(d["action"]) if d.get("action") else None,
            reason=d.get("reason"),
        )


@dataclass(frozen=True)
class FeedbackPacket:
    """Everything a (non-privileged) planner sees at one step."""

    step: int
    task: str
    episode_id: str
    instruction: str
    observation_text: str
    outcome_text: str  # empty before the first action
    success: bool | None  # None before the first action
    observation: dict | None  # structured view of the same perceived scene


def _ref_to_dict(ref: ObjectRef) -> dict:
    d: dict = {"kind": ref.kind.value}
    if ref.color is not None:
        d["color"] = ref.color.value
    if ref.size is not None:
        d["size"] = ref.size.value
    if ref.region is not None:
        d["region"] = ref.region.display
    if ref.ordinal is not None:
        d["ordinal"] = ref.ordinal
    if ref.id is not None:
        d["id"] = ref.id
    return d


def _ref_from_dict(d: dict) -> ObjectRef:
    return ObjectRef(
        kind=world.Kind(d.get("kind", "block")),
        color=world.Color(d["color"]) if d.get("color") else None,
        size=world.SizeClass(d["size"]) if d.get("size") else None,
        region=world.Region.from_display(d["region"]) if d.get("region") else None,
        ordinal=d.get("ordinal"),
        id=d.get("id"),
    )


def _place_to_dict(place: PlaceTarget) -> dict:
    d: dict = {"target": place.kind}
    if place.ref is not None:
        d["ref"] = _ref_to_dict(place.ref)
    if place.relation is not None:
        d["relation"] = place.relation
    if place.region is not None:
        d["region"] = place.region.display
    if place.point is not None:
        d["point"] = {"x": place.point.x, "y": place.point.y, "theta": place.point.theta}
    return d


def _place_from_dict(d: dict) -> PlaceTarget:
    kind = d["target"]
    if kind == "region":
        return PlaceTarget.in_region(world.Region.from_display(d["region"]))
    if kind == "table_point":
        p = d["point"]
        return PlaceTarget.table_point(world.Pose(p["x"], p["y"], p.get("theta", 0.0)))
    ref = _ref_from_dict(d["ref"])
    if kind == "on_object":
        return PlaceTarget.on_object(ref)
    if kind == "relative":
        return PlaceTarget.relative(ref, d["relation"])
    if kind == "in_bowl":
        return PlaceTarget.in_bowl(ref)
    if kind == "in_zone":
        return PlaceTarget.in_zone(ref)
    raise ValueError(f"unknown place target {kind!r}")


def _action_to_dict(action: Action) -> dict:
    return {"pick": _ref_to_dict(action.pick), "place": _place_to_dict(action.place)}


def _action_from_dict(d: dict) -> Action:
    return Action(pick=_ref_from_dict(d["pick"]), place=_place_from_dict(d["place"]))


def observation_dict(perceived: Scene) -> dict:
    """Structured observation: perceived objects with region annotations."""
    objs = []
    for o in sorted(perceived.objects.values(), key=lambda o: o.id):
        d = world.object_to_dict(o)
        d["region"] = world.region_of(o.pose).display
        objs.append(d)
    return {"clock": perceived.clock, "objects": objs}


def scene_from_observation(obs: dict) -> Scene:
    scene = Scene(clock=obs.get("clock", 0.0))
    for od in obs["objects"]:
        scene.add(world.object_from_dict(od))
    return scene


# ---------------------------------------------------------------------------
# Episode records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    step: int
    caption: str
    prior_outcome_text: str
    decision: PlannerDecision
    action: Action | None
    outcome: ExecutionOutcome | None
    digest: str

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "caption": self.caption,
            "prior_outcome_text": self.prior_outcome_text,
            "decision": self.decision.to_dict(),
            "action": _action_to_dict(self.action) if self.action else None,
            "outcome": self.outcome.to_dict() if self.outcome else None,
            "digest": self.digest,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StepRecord":
        return cls(
            step=d["step"],
            caption=d["caption"],
            prior_outcome_text=d["prior_outcome_text"],
            decision=PlannerDecision.from_dict(d["decision"]),
            action=_action_from_dict(d["action"]) if d.get("action") else None,
            outcome=ExecutionOutcome.from_dict(d["outcome"]) if d.get("outcome") else None,
            digest=d["digest"],
        )


@dataclass
class EpisodeRecord:
    """The full closed-loop trace: the unit of persistence and replay."""

    task: str
    seed: int
    episode_seed: int
    planner: str
    config: PerturbConfig
    max_steps: int
    template_version: str
    steps: list[StepRecord] = field(default_factory=list)
    termination: str = ""  # done | give_up | max_steps | planner_error_limit
    score: float = 0.0

    def header_dict(self) -> dict:
        return {
            "schema": EPISODE_SCHEMA,
            "task": self.task,
            "seed": self.seed,
            "episode_seed": self.episode_seed,
            "planner": self.planner,
            "config": self.config.to_dict(),
            "max_steps": self.max_steps,
            "template_version": self.template_version,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header_dict(), separators=(",", ":"))]
        for s in self.steps:
            lines.append(json.dumps(s.to_dict(), separators=(",", ":")))
        lines.append(
            json.dumps(
                {"termination": self.termination, "score": self.score, "n_steps": len(self.steps)},
                separators=(",", ":"),
            )
        )
        body = "\n".join(lines) + "\n"
        sha = hashlib.sha256(body.encode("utf-8")).hexdigest()
        return body + json.dumps({"record_sha": sha}, separators=(",", ":")) + "\n"

    @classmethod
    def from_jsonl(cls, text: str, check: bool = True) -> "EpisodeRecord":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) < 3:
            raise ValueError("truncated episode record")
        footer = json.loads(lines[-1])
        body = "\n".join(lines[:-1]) + "\n"
        if check:
            sha = hashlib.sha256(body.encode("utf-8")).hexdigest()
            if footer.get("record_sha") != sha:
                raise ValueError("episode record checksum mismatch")
        header = json.loads(lines[0])
        if header.get("schema") != EPISODE_SCHEMA:
            raise ValueError(f"unsupported episode schema {header.get('schema')!r}")
        tail = json.loads(lines[-2])
        rec = cls(
            task=header["task"],
            seed=header["seed"],
            episode_seed=header["episode_seed"],
            planner=header["planner"],
            config=PerturbConfig.from_dict(header["config"]),
            max_steps=header["max_steps"],
            template_version=header["template_version"],
            termination=tail["termination"],
            score=tail["score"],
        )
        rec.steps = [StepRecord.from_dict(json.loads(ln)) for ln in lines[1:-2]]
        return rec


def _chain_digest(prev: str, scene: Scene) -> str:
    return hashlib.sha256((prev + world.scene_to_json(scene)).encode("utf-8")).hexdigest()


def _start_digest(header: dict) -> str:
    return hashlib.sha256(json.dumps(header, separators=(",", ":")).encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# The loop
# ---------------------------------------------------------------------------


def default_max_steps(instance: TaskInstance) -> int:
    return max(1, MAX_STEPS_FACTOR * instance.min_steps)


def run_closed_loop(
    planner,
    instance: TaskInstance,
    cfg: PerturbConfig,
    source: RandomSource,
    max_steps: int | None = None,
    include_structured: bool = True,
    episode_id: str = "",
) -> EpisodeRecord:
    """Run one episode; returns the full trace scored on the final true scene."""
    if max_steps is None:
        max_steps = default_max_steps(instance)
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")

    record = EpisodeRecord(
        task=instance.task.value,
        seed=instance.seed,
        episode_seed=source.seed,
        planner=getattr(planner, "name", type(planner).__name__),
        config=cfg,
        max_steps=max_steps,
        template_version=TEMPLATE_VERSION,
    )
    digest = _chain_digest(_start_digest(record.header_dict()), instance.scene0)

    scene = instance.scene0.copy()
    privileged = isinstance(planner, PrivilegedPlanner)
    outcome_text = ""
    success: bool | None = None
    consecutive_errors = 0
    executed = 0
    step = 0
    termination = None

    while termination is None:
        if executed >= max_steps:
            termination = "max_steps"
            break
        perceived = perturb_observation(scene, cfg, source.channel(0, step, "obs"))
        caption = describe_scene(perceived, instance.task.value, instance.instruction)
        packet = FeedbackPacket(
            step=step,
            task=instance.task.value,
            episode_id=episode_id,
            instruction=instance.instruction,
            observation_text=caption,
            outcome_text=outcome_text,
            success=success,
            observation=observation_dict(perceived) if include_structured else None,
        )
        if privileged:
            decision = planner.decide_from_truth(scene, instance)
        else:
            decision = planner.decide(packet)

        action: Action | None = None
        outcome: ExecutionOutcome | None = None
        if decision.kind == "done":
            termination = "done"
        elif decision.kind == "giveup":
            termination = "give_up"
        elif decision.kind in ("act", "act_text", "error"):
            problem = decision.reason if decision.kind == "error" else None
            if decision.kind == "act_text":
                try:
                    action = parse_instruction(decision.text)
                except lang.ParseError as e:
                    problem = str(e)
            elif decision.kind == "act":
                action = decision.action
            if problem is not None:
                consecutive_errors += 1
                outcome_text = f"The last instruction could not be understood: {problem}."
                success = False
                record.steps.append(StepRecord(step, caption, packet.outcome_text, decision, None, None, digest))
                if consecutive_errors >= PLANNER_ERROR_LIMIT:
                    termination = "planner_error_limit"
                step += 1
                continue
            consecutive_errors = 0
            scene, outcome = execute_pick_place(scene, action, cfg, source.step_streams(0, step))
            executed += 1
            outcome_text = describe_outcome(action, outcome)
            success = outcome.ok
            digest = _chain_digest(digest, scene)
        else:
            raise ValueError(f"unknown decision kind {decision.kind!r}")

        record.steps.append(StepRecord(step, caption, packet.outcome_text, decision, action, outcome, digest))
        step += 1
        if termination is None and tasks.is_goal_satisfied(scene, instance):
            termination = "done"

    record.termination = termination
    record.score = instance.goal.score(scene)
    return record


# ---------------------------------------------------------------------------
# Replay
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReplayResult:
    ok: bool
    first_divergence: int | None = None
    detail: str = ""
    version_mismatch: bool = False


def replay_episode(record: EpisodeRecord, verify: bool = True) -> ReplayResult:
    """Re-execute a record's decisions with its recorded seed; with verify,
    check every chained scene digest, the score and the termination reason."""
    version_mismatch = record.template_version != TEMPLATE_VERSION
    instance = tasks.sample_instance(tasks.TaskId(record.task), record.seed)
    source = RandomSource(record.episode_seed)
    scene = instance.scene0.copy()
    digest = _chain_digest(_start_digest(record.header_dict()), instance.scene0)
    for s in record.steps:
        if s.action is not None:
            scene, _ = execute_pick_place(scene, s.action, record.config, source.step_streams(0, s.step))
            digest = _chain_digest(digest, scene)
        if verify and digest != s.digest:
            return ReplayResult(
                False, first_divergence=s.step,
                detail=f"scene digest mismatch at step {s.step}",
                version_mismatch=version_mismatch,
            )
    if verify:
        score = instance.goal.score(scene)
        if abs(score - record.score) > 1e-9:
            return ReplayResult(
                False, first_divergence=len(record.steps),
                detail=f"score mismatch: replayed {score}, recorded {record.score}",
                version_mismatch=version_mismatch,
            )
    return ReplayResult(True, version_mismatch=version_mismatch)


# ---------------------------------------------------------------------------
# Rule-based planner (deterministic stand-in for an LLM planner)
# ---------------------------------------------------------------------------


class RulePlanner:
    """Parses the high-level instruction, rebuilds the goal from the perceived
    structured observation, and runs the oracle's atom-selection logic on that
    perceived scene. Emits textual instructions (which must round-trip through
    the parser), retries after drops, and adds ordinals on ambiguity --- all of
    which falls out of replanning against fresh observations."""

    name = "rule"

    def decide(self, fb: FeedbackPacket) -> PlannerDecision:
        ident = identify_task(fb.instruction)
        if ident is None:
            return PlannerDecision.give_up("unrecognized instruction")
        if fb.observation is None:
            return PlannerDecision.give_up("structured observations disabled")
        task, params = ident
        perceived = scene_from_observation(fb.observation)
        try:
            goal = build_goal(task, perceived, params)
            action = plan_next(perceived, goal)
        except world.SimError as e:
            return PlannerDecision.give_up(str(e))
        if action is None:
            return PlannerDecision.done()
        return PlannerDecision.act_text(lang.render_instruction(action))

    def close(self) -> None:
        pass


# ---------------------------------------------------------------------------
# External planner bridge (newline-delimited JSON over stdio or TCP)
# ---------------------------------------------------------------------------


class _LineTransport:
    """Reader thread plus blocking send over a subprocess or TCP socket."""

    def __init__(self):
        self._queue: queue.Queue[str | None] = queue.Queue()
        self._thread: threading.Thread | None = None

    def _start_reader(self, stream) -> None:
        def pump():
            try:
                for line in stream:
                    self._queue.put(line)
            except (OSError, ValueError):
                pass
            self._queue.put(None)  # EOF sentinel

        self._thread = threading.Thread(target=pump, daemon=True)
        self._thread.start()

    def recv(self, timeout: float) -> str | None:
        """One line, or None on EOF; raises TimeoutError."""
        try:
            line = self._queue.get(timeout=timeout)
        except queue.Empty:
            raise TimeoutError("planner did not answer in time") from None
        return line

    def send(self, line: str) -> None:
        raise NotImplementedError

    def close(self) -> None:
        raise NotImplementedError


class _SubprocessTransport(_LineTransport):
    def __init__(self, command: str):
        super().__init__()
        self._proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
            bufsize=1,
        )
        self._start_reader(self._proc.stdout)

    def send(self, line: str) -> None:
        if self._proc.stdin is None or self._proc.poll() is not None:
            raise BrokenPipeError("planner process exited")
        self._proc.stdin.write(line + "\n")
        self._proc.stdin.flush()

    def close(self) -> None:
        try:
            if self._proc.stdin:
                self._proc.stdin.close()
            self._proc.wait(timeout=2.0)
        except (OSError, subprocess.TimeoutExpired):
            self._proc.kill()
            self._proc.wait()


class _TcpTransport(_LineTransport):
    def __init__(self, host: str, port: int):
        super().__init__()
        self._sock = socket.create_connection((host, port), timeout=10.0)
        self._sock.settimeout(None)
        self._file = self._sock.makefile("rw", encoding="utf-8", newline="\n")
        self._start_reader(self._file)

    def send(self, line: str) -> None:
        self._file.write(line + "\n")
        self._file.flush()

    def close(self) -> None:
        try:
            self._file.close()
            self._sock.close()
        except OSError:
            pass


class ExternalPlanner:
    """Adapts the wire protocol to the planner interface.

    One transport per episode. Timeouts and malformed messages are planner
    errors (they count toward the error limit); a closed connection is a
    give-up, scored on the state reached.
    """

    def __init__(self, transport: _LineTransport, name: str, timeout: float = BRIDGE_TIMEOUT):
        self._transport = transport
        self._timeout = timeout
        self._initialized = False
        self.name = name

    def decide(self, fb: FeedbackPacket) -> PlannerDecision:
        if not self._initialized:
            message = {
                "type": "init",
                "version": PROTOCOL_VERSION,
                "episode_id": fb.episode_id,
                "task": fb.task,
                "instruction": fb.instruction,
                "observation": fb.observation,
                "caption": fb.observation_text,
            }
            self._initialized = True
        else:
            message = {
                "type": "feedback",
                "step": fb.step,
                "outcome_text": fb.outcome_text,
                "success": fb.success,
                "observation": fb.observation,
                "caption": fb.observation_text,
            }
        try:
            self._transport.send(json.dumps(message, separators=(",", ":")))
            line = self._transport.recv(self._timeout)
        except TimeoutError as e:
            return PlannerDecision.error(str(e))
        except (BrokenPipeError, OSError) as e:
            return PlannerDecision.give_up(f"planner connection failed: {e}")
        if line is None:
            return PlannerDecision.give_up("planner disconnected")
        return self._decode(line)

    @staticmethod
    def _decode(line: str) -> PlannerDecision:
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            return PlannerDecision.error(f"malformed message: {line[:80]!r}")
        if not isinstance(msg, dict):
            return PlannerDecision.error("message is not an object")
        mtype = msg.get("type")
        if mtype == "done":
            return PlannerDecision.done()
        if mtype == "giveup":
            return PlannerDecision.give_up(str(msg.get("reason", "")))
        if mtype == "action":
            if "text" in msg:
                return PlannerDecision.act_text(str(msg["text"]))
            if "pick" in msg and "place" in msg:
                try:
                    return PlannerDecision.act(
                        Action(pick=_ref_from_dict(msg["pick"]), place=_place_from_dict(msg["place"]))
                    )
                except (KeyError, ValueError) as e:
                    return PlannerDecision.error(f"bad structured action: {e}")
            return PlannerDecision.error("action message lacks text or pick/place")
        return PlannerDecision.error(f"unknown message type {mtype!r}")

    def close(self) -> None:
        self._transport.close()


def external_bridge(endpoint: str, timeout: float = BRIDGE_TIMEOUT) -> ExternalPlanner:
    """Planner speaking the wire protocol: `extern:<command>` spawns a
    subprocess on stdio; `tcp:<host>:<port>` connects a socket."""
    if endpoint.startswith("extern:"):
        command = endpoint[len("extern:"):]
        return ExternalPlanner(_SubprocessTransport(command), name=f"extern:{command}", timeout=timeout)
    if endpoint.startswith("tcp:"):
        host, _, port = endpoint[len("tcp:"):].rpartition(":")
        return ExternalPlanner(_TcpTransport(host, int(port)), name=endpoint, timeout=timeout)
    raise ValueError(f"unknown planner endpoint {endpoint!r}")
