"""Stochastic disturbance models and the seeded, stream-split random source.

Noise magnitudes follow the benchmark's convention of pixel-denominated
sigmas on a nominal 320-px-wide top-down view (3.125 mm/px): sigma 2.5 px for
the placement primitive, sigma 3 px for observations, plus a per-second drop
probability during transport. Every draw comes from a substream that is a
pure function of (seed, episode, step, channel), so runs replay bit-exactly.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from . import world
from .world import Pose, Scene, Support, clamp_to_workspace

_MASK64 = (1 << 64) - 1

#: Nominal top-down view: 320 px across the 1.0 m workspace width.
DEFAULT_PX_TO_M = 1.0 / 320.0

TOPPLE_MIN_HEIGHT = 3
TOPPLE_PROB_PER_LEVEL = 0.05
TOPPLE_PROB_CAP = 0.25
TOPPLE_SCATTER_RADIUS = 0.06


@dataclass(frozen=True)
class PerturbConfig:
    place_sigma_px: float = 2.5
    obs_sigma_px: float = 3.0
    drop_p_per_sec: float = 0.0
    topple_enabled: bool = False
    px_to_m: float = DEFAULT_PX_TO_M
    transport_speed: float = 0.5  # m/s

    def __post_init__(self):
        if self.place_sigma_px < 0 or self.obs_sigma_px < 0:
            raise ValueError("noise sigmas must be >= 0")
        if not 0.0 <= self.drop_p_per_sec <= 1.0:
            raise ValueError("drop_p_per_sec must be in [0, 1]")
        if self.px_to_m <= 0:
            raise ValueError("px_to_m must be > 0")
        if self.transport_speed <= 0:
            raise ValueError("transport_speed must be > 0")

    @property
    def place_sigma_m(self) -> float:
        return self.place_sigma_px * self.px_to_m

    @property
    def obs_sigma_m(self) -> float:
        return self.obs_sigma_px * self.px_to_m

    @classmethod
    def noiseless(cls) -> "PerturbConfig":
        return cls(place_sigma_px=0.0, obs_sigma_px=0.0, drop_p_per_sec=0.0, topple_enabled=False)

    def to_dict(self) -> dict:
        return {
            "place_sigma_px": self.place_sigma_px,
            "obs_sigma_px": self.obs_sigma_px,
            "drop_p": self.drop_p_per_sec,
            "topple": self.topple_enabled,
            "px_to_m": self.px_to_m,
            "speed": self.transport_speed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PerturbConfig":
        known = {
            "place_sigma_px": ("place_sigma_px", float),
            "obs_sigma_px": ("obs_sigma_px", float),
            "drop_p": ("drop_p_per_sec", float),
            "topple": ("topple_enabled", _as_bool),
            "px_to_m": ("px_to_m", float),
            "speed": ("transport_speed", float),
        }
        kwargs = {}
        for key, value in d.items():
            if key not in known:
                raise ValueError(f"unknown perturbation key {key!r}")
            field_name, conv = known[key]
            kwargs[field_name] = conv(value)
        return cls(**kwargs)


def _as_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, str):
        if v.lower() in ("1", "true", "yes", "on"):
            return True
        if v.lower() in ("0", "false", "no", "off"):
            return False
    raise ValueError(f"cannot read {v!r} as a flag")


def _channel_tag(tag: str) -> int:
    # Stable across processes; never use built-in hash() here.
    return zlib.crc32(tag.encode("utf-8")) & 0xFFFFFFFF


@dataclass(frozen=True)
class RandomSource:
    """Root of all simulation randomness for one episode family."""

    seed: int

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)

    def channel(self, episode: int, step: int, tag: str) -> np.random.Generator:
        """Independent generator for one (episode, step, channel) triple."""
        ss = np.random.SeedSequence([self.seed, int(episode), int(step), _channel_tag(tag)])
        return np.random.Generator(np.random.PCG64(ss))

    def step_streams(self, episode: int, step: int) -> "StepStreams":
        return StepStreams(self, episode, step)


@dataclass(frozen=True)
class StepStreams:
    """Lazily-derived per-channel generators for one step of one episode."""

    source: RandomSource
    episode: int
    step: int

    def channel(self, tag: str) -> np.random.Generator:
        return self.source.channel(self.episode, self.step, tag)


def derive_seed(*parts) -> int:
    """Stable 64-bit seed mixed from arbitrary labelled parts."""
    acc = 0x9E3779B97F4A7C15
    for part in parts:
        for token in str(part).encode("utf-8"):
            acc = ((acc ^ token) * 0x100000001B3) & _MASK64
        acc = (acc * 0x9E3779B97F4A7C15 + 0xD1B54A32D192ED03) & _MASK64
    return acc


# ---------------------------------------------------------------------------
# Disturbance operations
# ---------------------------------------------------------------------------


def perturb_place(target: Pose, cfg: PerturbConfig, rng: np.random.Generator) -> Pose:
    """Add independent per-axis Gaussian placement noise; clamp to workspace."""
    sigma = cfg.place_sigma_m
    if sigma == 0.0:
        return target
    dx, dy = rng.normal(0.0, sigma, size=2)
    x, y = clamp_to_workspace(target.x + dx, target.y + dy)
    return Pose(x, y, target.theta)


@dataclass(frozen=True)
class DropOutcome:
    dropped: bool
    at: Pose | None = None
    t_drop: float | None = None


def roll_drop(pick: Pose, place: Pose, cfg: PerturbConfig, rng: np.random.Generator) -> DropOutcome:
    """Bernoulli drop trial on every whole elapsed second of the transport.

    The first success drops the block at the linear interpolation point at
    that second; placement noise is applied by the executor on landing.
    """
    if cfg.drop_p_per_sec == 0.0:
        return DropOutcome(False)
    dist = pick.distance(place)
    duration = dist / cfg.transport_speed
    for k in range(1, int(math.floor(duration)) + 1):
        if rng.random() < cfg.drop_p_per_sec:
            frac = (k * cfg.transport_speed) / dist
            at = Pose(
                pick.x + (place.x - pick.x) * frac,
                pick.y + (place.y - pick.y) * frac,
                pick.theta,
            )
            return DropOutcome(True, at=at, t_drop=float(k))
    return DropOutcome(False)


def perturb_observation(scene: Scene, cfg: PerturbConfig, rng: np.random.Generator) -> Scene:
    """Perceived copy of the scene with jittered positions.

    Every object's (x, y) receives independent Gaussian noise and existing
    support relations are re-validated against the jittered geometry: a block
    whose jittered center leaves its bowl's radius is perceived on the table,
    and a stacked block whose jittered footprint slides off its support's is
    perceived on the table too.
    """
    sigma = cfg.obs_sigma_m
    perceived = scene.copy()
    if sigma == 0.0:
        return perceived
    ids = sorted(perceived.objects)
    noise = rng.normal(0.0, sigma, size=(len(ids), 2))
    for (dx, dy), obj_id in zip(noise, ids):
        o = perceived.objects[obj_id]
        x, y = clamp_to_workspace(o.pose.x + dx, o.pose.y + dy)
        perceived.update(obj_id, pose=Pose(x, y, o.pose.theta))
    for obj_id in ids:
        o = perceived.objects[obj_id]
        if o.support.kind == "in_bowl":
            bowl = perceived.objects[o.support.base]
            if o.pose.distance(bowl.pose) > world.BOWL_CAPTURE_RADIUS:
                perceived.update(obj_id, support=Support.table())
        elif o.support.kind == "on":
            base = perceived.objects[o.support.base]
            if world.footprint_overlap(o, base) < world.STACK_CAPTURE_OVERLAP:
                perceived.update(obj_id, support=Support.table())
    return perceived


@dataclass(frozen=True)
class ToppleOutcome:
    toppled: bool
    offset: tuple[float, float] | None = None


def roll_topple(stack_height_after_place: int, cfg: PerturbConfig, rng: np.random.Generator) -> ToppleOutcome:
    """Optional instability model for tall stacks (off by default).

    Stacks of height >= 3 topple with probability 0.05*(h-2), capped at 0.25;
    the fallen block lands uniformly within 0.06 m of the stack base.
    """
    if stack_height_after_place < 1:
        raise ValueError("stack height must be >= 1")
    if not cfg.topple_enabled or stack_height_after_place < TOPPLE_MIN_HEIGHT:
        return ToppleOutcome(False)
    p = min(TOPPLE_PROB_PER_LEVEL * (stack_height_after_place - 2), TOPPLE_PROB_CAP)
    if rng.random() >= p:
        return ToppleOutcome(False)
    r = TOPPLE_SCATTER_RADIUS * math.sqrt(rng.random())
    angle = rng.random() * 2.0 * math.pi
    return ToppleOutcome(True, offset=(r * math.cos(angle), r * math.sin(angle)))
