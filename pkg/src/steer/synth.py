"""Synthetic corpus generation: sample skill scripts, run them, write episodes.

A script spec picks a grasp approach, a number of reorientations (alternating
tilt-out/tilt-back), and a lift or place ending; the sampled script runs in
the simulator and is written in the episode wire format together with its
ground-truth segments. Generation is deterministic for a given (spec, count,
seed) no matter how many workers split the index range.

Top-down grasps pair only with zero reorientations: once the wrist points
straight down there is no more-vertical class for a tilt to sweep into, so a
scripted reorientation could not be recovered from proprioception. The
round-trip preset therefore covers every realizable cell of
{approach} x {0..2 reorientations} x {lift, place}.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import language
from .dsl import SkillCall
from .sim import NoiseConfig, synth_episode
from .trajectory import SkillKind, episode_to_line

DEFAULT_OBJECTS = (
    "coke can",
    "pink cup",
    "apple",
    "orange",
    "sponge",
    "water bottle",
    "green rice chip bag",
    "paper bowl",
)


@dataclass(frozen=True)
class ScriptSpec:
    """One weighted script family: how to grasp, how much to rotate, how to end."""

    grasp: str  # "top-down" | "side" | "diagonal"
    reorients: int = 0  # 0..2, alternating to_horizontal / to_upright
    terminal: str = "lift"  # "lift" | "place"
    mid_lift: bool = False  # lift right after the grasp (the pour shape)
    weight: float = 1.0

    def __post_init__(self):
        if self.grasp not in language.GRASP_MODIFIERS:
            raise ValueError(f"unknown grasp approach: {self.grasp!r}")
        if self.terminal not in ("lift", "place"):
            raise ValueError(f"terminal must be lift or place, got {self.terminal!r}")
        if not 0 <= self.reorients <= 2:
            raise ValueError("reorients must be 0, 1, or 2")
        if self.grasp == "top-down" and self.reorients > 0:
            raise ValueError("top-down grasps cannot precede detectable reorientations")


@dataclass(frozen=True)
class SynthSpec:
    """A distribution over script families plus episode-shaping knobs."""

    mix: tuple[ScriptSpec, ...]
    objects: tuple[str, ...] = DEFAULT_OBJECTS
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    min_steps: int | None = None

    @classmethod
    def from_json(cls, text: str) -> "SynthSpec":
        d = json.loads(text)
        mix = tuple(
            ScriptSpec(
                grasp=m["grasp"],
                reorients=m.get("reorients", 0),
                terminal=m.get("terminal", "lift"),
                mid_lift=m.get("mid_lift", False),
                weight=m.get("weight", 1.0),
            )
            for m in d["mix"]
        )
        noise = NoiseConfig(**d.get("noise", {}))
        return cls(
            mix=mix,
            objects=tuple(d.get("objects", DEFAULT_OBJECTS)),
            noise=noise,
            min_steps=d.get("min_steps"),
        )

    def as_dict(self) -> dict:
        return {
            "mix": [
                {
                    "grasp": m.grasp,
                    "reorients": m.reorients,
                    "terminal": m.terminal,
                    "mid_lift": m.mid_lift,
                    "weight": m.weight,
                }
                for m in self.mix
            ],
            "objects": list(self.objects),
            "noise": {
                "quat_axis_deg": self.noise.quat_axis_deg,
                "position_m": self.noise.position_m,
                "aperture": self.noise.aperture,
            },
            "min_steps": self.min_steps,
        }


def round_trip_spec(noise: NoiseConfig | None = None) -> SynthSpec:
    """Every realizable (approach, reorientations, terminal) cell, equal weight."""
    mix = [
        ScriptSpec(grasp=g, reorients=r, terminal=t)
        for g in ("side", "diagonal")
        for r in (0, 1, 2)
        for t in ("lift", "place")
    ]
    mix += [ScriptSpec(grasp="top-down", reorients=0, terminal=t) for t in ("lift", "place")]
    return SynthSpec(mix=tuple(mix), noise=noise or NoiseConfig())


def pick_spec(noise: NoiseConfig | None = None) -> SynthSpec:
    """Plain pick-and-lift episodes across the three grasp approaches."""
    mix = tuple(ScriptSpec(grasp=g, terminal="lift") for g in ("top-down", "side", "diagonal"))
    return SynthSpec(mix=mix, noise=noise or NoiseConfig())


def pour_spec(noise: NoiseConfig | None = None) -> SynthSpec:
    """The five-command pour shape: side grasp, lift, tilt out, tilt back, place."""
    mix = (ScriptSpec(grasp="side", reorients=2, terminal="place", mid_lift=True),)
    return SynthSpec(mix=mix, objects=("pink cup",), noise=noise or NoiseConfig())


PRESETS = {"round_trip": round_trip_spec, "pick": pick_spec, "pour": pour_spec}


def build_script(spec: ScriptSpec, obj: str, dest: str) -> tuple[str, list[SkillCall]]:
    """Materialize (original instruction, skill script) for one episode."""
    calls = [SkillCall(SkillKind.GRASP, obj, spec.grasp)]
    if spec.mid_lift:
        calls.append(SkillCall(SkillKind.LIFT, obj))
    directions = (language.TO_HORIZONTAL, language.TO_UPRIGHT)
    for i in range(spec.reorients):
        calls.append(SkillCall(SkillKind.REORIENT, obj, directions[i % 2]))
    terminal = SkillKind.LIFT if spec.terminal == "lift" else SkillKind.PLACE
    calls.append(SkillCall(terminal, obj))

    # A plausible original (episode-level) instruction for the motion shape.
    if spec.reorients == 0:
        instruction = f"pick {obj}" if spec.terminal == "lift" else f"move {obj} near {dest}"
    elif spec.reorients % 2 == 1:
        instruction = f"knock {obj}"
    else:
        instruction = f"place {obj} upright"
    return instruction, calls


def synth_one(spec: SynthSpec, corpus_seed: int, index: int) -> str:
    """Generate episode ``index`` of a corpus as its wire-format line."""
    rng = np.random.default_rng((corpus_seed, index))
    weights = np.array([m.weight for m in spec.mix], dtype=np.float64)
    weights /= weights.sum()
    script_spec = spec.mix[int(rng.choice(len(spec.mix), p=weights))]
    obj = spec.objects[int(rng.integers(len(spec.objects)))]
    dest = spec.objects[(spec.objects.index(obj) + 1) % len(spec.objects)]
    instruction, calls = build_script(script_spec, obj, dest)
    episode = synth_episode(
        instruction,
        calls,
        noise=spec.noise,
        seed=corpus_seed * 1_000_003 + index,
        episode_id=f"ep-{index:06d}",
        min_steps=spec.min_steps,
    )
    return episode_to_line(episode)


def _synth_range(args: tuple[SynthSpec, int, int, int]) -> bytes:
    spec, corpus_seed, start, stop = args
    return "".join(synth_one(spec, corpus_seed, i) + "\n" for i in range(start, stop)).encode()


def synth_corpus(
    spec: SynthSpec,
    count: int,
    seed: int,
    output_path: str,
    workers: int = 1,
) -> int:
    """Write ``count`` synthetic episodes; identical bytes for any worker count."""
    if count < 1:
        raise ValueError("count must be >= 1")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    step = max(1, count // (workers * 4)) if workers > 1 else count
    ranges = [(spec, seed, start, min(start + step, count)) for start in range(0, count, step)]
    with open(output_path, "wb") as sink:
        if workers == 1:
            for chunk in map(_synth_range, ranges):
                sink.write(chunk)
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for chunk in pool.map(_synth_range, ranges):
                    sink.write(chunk)
    return count
