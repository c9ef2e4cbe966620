"""Deterministic kinematic tabletop world with scripted skill controllers.

The world is rule-based, not physical: objects sit on a table, at most one
can be held (rigidly tracking the gripper), and per-object grasp rules encode
which approach directions succeed in a scenario (a flower pot must be taken
from the side, a kettle over the top, fruit in clutter from above). Skill
controllers generate smooth trajectories -- linear in position, spherical in
orientation, a fixed number of steps per skill -- whose final approach vector
classifies exactly to the requested grasp class, which is what makes
simulator output usable as segmentation ground truth.

Besides executing plans, the module synthesizes annotated episodes: a skill
script is run in a fresh scene, the per-skill step ranges become ground-truth
segments, and optional sensor jitter is layered on afterward.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable

import numpy as np

from . import language
from .dsl import SkillCall
from .geometry import (
    GraspApproachClass,
    approach_vector,
    default_anchor_set,
    nearest_anchor,
    quat_aligning_approach,
    quat_slerp_path,
)
from .instructions import parse_instruction
from .trajectory import Episode, SkillKind, SkillSegment, TimeStep

UPRIGHT = "upright"
HORIZONTAL = "horizontal"

# Wrist targets whose approach vectors sit exactly on class-representative
# anchors. Reorientation sweeps move between rank-adjacent entries so each
# sweep crosses exactly one class boundary.
_CLASS_TARGETS = {
    GraspApproachClass.TOP_DOWN: np.array([0.0, 0.0, -1.0]),
    GraspApproachClass.SIDE: np.array([0.0, 1.0, 0.0]),
    GraspApproachClass.DIAGONAL: np.array([0.0, 1.0, -1.0]) / np.sqrt(2.0),
    GraspApproachClass.UPWARD: np.array([0.0, 1.0, 1.0]) / np.sqrt(2.0),
}

_TILT_UP = {  # toward a more vertical wrist: object tips toward horizontal
    GraspApproachClass.SIDE: GraspApproachClass.DIAGONAL,
    GraspApproachClass.DIAGONAL: GraspApproachClass.TOP_DOWN,
}
_TILT_DOWN = {  # toward a side carry: object comes back upright
    GraspApproachClass.DIAGONAL: GraspApproachClass.SIDE,
    GraspApproachClass.TOP_DOWN: GraspApproachClass.DIAGONAL,
    GraspApproachClass.UPWARD: GraspApproachClass.SIDE,
    # A side-held object flipped upright carries the wrist past vertical.
    GraspApproachClass.SIDE: GraspApproachClass.UPWARD,
}


class SimError(Exception):
    """Precondition violation on a skill call (unknown object, not held, ...)."""


@dataclass
class GraspRule:
    """Which approaches succeed on an object, and what happens otherwise."""

    allowed: tuple[str, ...]  # surface labels: "top-down" | "side" | "diagonal"
    reason: str = "unsuitable approach"
    topples: str | None = None  # "self" | "neighbor" | None

    def as_dict(self) -> dict:
        return {"allowed": list(self.allowed), "reason": self.reason, "topples": self.topples}


@dataclass
class ObjectState:
    name: str
    position: np.ndarray
    orientation_class: str = UPRIGHT
    held: bool = False
    toppleable: bool = True
    grasp_rule: GraspRule | None = None

    def as_dict(self) -> dict:
        return {
            "position": [float(x) for x in self.position],
            "orientation": self.orientation_class,
            "held": self.held,
            "toppleable": self.toppleable,
            "grasp_constraint": self.grasp_rule.as_dict() if self.grasp_rule else None,
        }


@dataclass
class GripperState:
    position: np.ndarray
    wrist_orientation: np.ndarray
    aperture: float


@dataclass
class SceneState:
    gripper: GripperState
    objects: dict[str, ObjectState]
    table_height: float = 0.75

    def validate(self) -> None:
        held = [o.name for o in self.objects.values() if o.held]
        if len(held) > 1:
            raise ValueError(f"more than one held object: {held}")
        for name in held:
            if not np.allclose(self.objects[name].position, self.gripper.position):
                raise ValueError(f"held object {name!r} does not track the gripper")

    @property
    def held_object(self) -> ObjectState | None:
        for obj in self.objects.values():
            if obj.held:
                return obj
        return None

    def snapshot(self) -> dict:
        return {
            "gripper": {
                "position": [float(x) for x in self.gripper.position],
                "wrist_quat": [float(x) for x in self.gripper.wrist_orientation],
                "aperture": float(self.gripper.aperture),
            },
            "objects": {name: obj.as_dict() for name, obj in self.objects.items()},
            "table_height": float(self.table_height),
        }


@dataclass
class SkillOutcome:
    """Result of one skill execution plus the trajectory it appended."""

    success: bool
    reason: str
    start_index: int
    positions: np.ndarray
    quaternions: np.ndarray
    apertures: np.ndarray
    held_object: str | None = None  # object attached during (part of) the skill
    held_from: int = 0  # trajectory-relative step where attachment begins

    @property
    def n_steps(self) -> int:
        return int(self.apertures.shape[0])

    @property
    def end_index(self) -> int:
        return self.start_index + self.n_steps - 1

    @property
    def trajectory(self) -> list[TimeStep]:
        return [
            TimeStep(
                self.start_index + i,
                self.positions[i],
                self.quaternions[i],
                float(self.apertures[i]),
            )
            for i in range(self.n_steps)
        ]


def _load_scenarios() -> dict:
    text = resources.files("steer.data").joinpath("scenarios.json").read_text()
    return json.loads(text)


def available_scenarios() -> list[str]:
    return sorted(_load_scenarios().keys())


def reset(
    scenario: str | None = None,
    seed: int = 0,
    objects: Iterable[ObjectState] | None = None,
    table_height: float = 0.75,
) -> SceneState:
    """Deterministic initial scene for a named scenario or an explicit object list."""
    if objects is not None:
        scene = SceneState(
            gripper=_home_gripper(table_height),
            objects={o.name: o for o in objects},
            table_height=table_height,
        )
        scene.validate()
        return scene
    if scenario is None:
        raise SimError("need a scenario name or an explicit object list")
    catalog = _load_scenarios()
    if scenario not in catalog:
        raise SimError(f"unknown scenario: {scenario!r}")
    rng = np.random.default_rng(seed)
    objs: dict[str, ObjectState] = {}
    for spec in catalog[scenario]["objects"]:
        x, y = spec["base_position"]
        jitter = rng.uniform(-0.02, 0.02, size=2)
        z = table_height + float(spec.get("height_above_table", 0.0))
        rule = None
        if spec.get("grasp_rule"):
            r = spec["grasp_rule"]
            rule = GraspRule(tuple(r["allowed"]), r.get("reason", "unsuitable approach"), r.get("topples"))
        objs[spec["name"]] = ObjectState(
            name=spec["name"],
            position=np.array([x + jitter[0], y + jitter[1], z]),
            orientation_class=spec.get("orientation", UPRIGHT),
            toppleable=spec.get("toppleable", True),
            grasp_rule=rule,
        )
    scene = SceneState(gripper=_home_gripper(table_height), objects=objs, table_height=table_height)
    scene.validate()
    return scene


def _home_gripper(table_height: float) -> GripperState:
    return GripperState(
        position=np.array([0.0, 0.25, table_height + 0.30]),
        wrist_orientation=np.array([1.0, 0.0, 0.0, 0.0]),  # approach = (0, 1, 0)
        aperture=1.0,
    )


class SimSession:
    """A single simulated workspace: one scene, one serialized skill stream.

    Skill executions mutate the scene and append to the session-global
    trajectory; concurrent use of one session is the caller's problem (the
    gateway serializes per session), but distinct sessions are independent.
    """

    def __init__(
        self,
        scenario: str | None = None,
        seed: int = 0,
        objects: Iterable[ObjectState] | None = None,
        steps_per_skill: int = 20,
        table_height: float = 0.75,
    ):
        self.scene = reset(scenario, seed, objects, table_height)
        self.scenario = scenario
        self.seed = seed
        self.steps_per_skill = int(steps_per_skill)
        self.n_steps = 0
        self._chunks: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self._anchors = default_anchor_set()

    # -- trajectory bookkeeping -------------------------------------------

    def _append(self, positions, quaternions, apertures, held_object=None, held_from=0,
                success=True, reason="") -> SkillOutcome:
        positions = np.asarray(positions, dtype=np.float64)
        quaternions = np.asarray(quaternions, dtype=np.float64)
        apertures = np.asarray(apertures, dtype=np.float64)
        outcome = SkillOutcome(
            success=success,
            reason=reason,
            start_index=self.n_steps,
            positions=positions,
            quaternions=quaternions,
            apertures=apertures,
            held_object=held_object,
            held_from=held_from,
        )
        self._chunks.append((positions, quaternions, apertures))
        self.n_steps += outcome.n_steps
        g = self.scene.gripper
        g.position = positions[-1].copy()
        g.wrist_orientation = quaternions[-1].copy()
        g.aperture = float(apertures[-1])
        held = self.scene.held_object
        if held is not None:
            held.position = g.position.copy()
        return outcome

    def trajectory_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self._chunks:
            return (np.empty((0, 3)), np.empty((0, 4)), np.empty(0))
        return (
            np.concatenate([c[0] for c in self._chunks]),
            np.concatenate([c[1] for c in self._chunks]),
            np.concatenate([c[2] for c in self._chunks]),
        )

    # -- object lookup -----------------------------------------------------

    def find_object(self, name: str) -> ObjectState:
        """Exact name match, falling back to a unique containment match.

        Plans often say "cup" where the scene says "pink cup" (or vice
        versa); a unique substring match resolves that without rewriting any
        instruction text.
        """
        if name in self.scene.objects:
            return self.scene.objects[name]
        matches = [
            o
            for key, o in self.scene.objects.items()
            if name.lower() in key.lower() or key.lower() in name.lower()
        ]
        if len(matches) == 1:
            return matches[0]
        raise SimError(f"unknown object: {name!r}")

    # -- motion primitives ---------------------------------------------------

    def _motion(self, target_pos, target_quat, aperture, steps=None):
        """Interpolated gripper path holding the aperture constant."""
        steps = steps if steps is not None else self.steps_per_skill
        g = self.scene.gripper
        ts = np.linspace(0.0, 1.0, steps + 1)[1:]
        positions = g.position[None, :] + ts[:, None] * (np.asarray(target_pos) - g.position)[None, :]
        quaternions = quat_slerp_path(g.wrist_orientation, target_quat, ts)
        apertures = np.full(steps, aperture, dtype=np.float64)
        return positions, quaternions, apertures

    def _wrist_class(self) -> GraspApproachClass:
        vec = approach_vector(self.scene.gripper.wrist_orientation)
        return nearest_anchor(vec, self._anchors).semantic_class

    # -- skills ---------------------------------------------------------------

    def exec_grasp(self, object_name: str, approach: GraspApproachClass | str) -> SkillOutcome:
        if isinstance(approach, str):
            approach = GraspApproachClass.from_label(approach)
        if approach is GraspApproachClass.UPWARD:
            raise SimError("upward is not a commandable grasp approach")
        obj = self.find_object(object_name)
        if self.scene.held_object is not None:
            raise SimError(f"cannot grasp {obj.name!r}: already holding {self.scene.held_object.name!r}")

        target_quat = quat_aligning_approach(_CLASS_TARGETS[approach])
        pos_a, quat_a, ap_a = self._motion(obj.position, target_quat, 1.0)
        close = np.array([0.8, 0.6, 0.4, 0.2, 0.0])
        pos_c = np.repeat(pos_a[-1][None, :], close.shape[0], axis=0)
        quat_c = np.repeat(quat_a[-1][None, :], close.shape[0], axis=0)

        rule = obj.grasp_rule
        if rule is not None and approach.label not in rule.allowed:
            # The motion happened; the grasp just should not have. Apply the
            # scenario's consequence and reopen.
            reopen = np.array([0.25, 0.5, 0.75, 1.0])
            positions = np.concatenate([pos_a, pos_c, np.repeat(pos_c[-1][None, :], 4, axis=0)])
            quats = np.concatenate([quat_a, quat_c, np.repeat(quat_c[-1][None, :], 4, axis=0)])
            apertures = np.concatenate([ap_a, close, reopen])
            if rule.topples == "self" and obj.toppleable:
                obj.orientation_class = HORIZONTAL
            elif rule.topples == "neighbor":
                for other in self.scene.objects.values():
                    if other.name != obj.name and other.toppleable:
                        other.orientation_class = HORIZONTAL
                        break
            return self._append(positions, quats, apertures, success=False, reason=rule.reason)

        positions = np.concatenate([pos_a, pos_c])
        quats = np.concatenate([quat_a, quat_c])
        apertures = np.concatenate([ap_a, close])
        obj.held = True
        obj.position = positions[-1].copy()
        return self._append(
            positions, quats, apertures,
            held_object=obj.name, held_from=positions.shape[0] - 1,
        )

    def exec_reorient(self, object_name: str, direction: str) -> SkillOutcome:
        if direction not in language.REORIENT_DIRECTIONS:
            raise SimError(f"unknown reorient direction: {direction!r}")
        obj = self.find_object(object_name)
        if not obj.held:
            raise SimError(f"cannot reorient {obj.name!r}: not held")

        if direction == language.TO_HORIZONTAL and obj.orientation_class != UPRIGHT:
            return self._hold_failure(obj, "already horizontal")
        if direction == language.TO_UPRIGHT and obj.orientation_class != HORIZONTAL:
            return self._hold_failure(obj, "already upright")

        current = self._wrist_class()
        table = _TILT_UP if direction == language.TO_HORIZONTAL else _TILT_DOWN
        if current not in table:
            return self._hold_failure(obj, "wrist cannot tilt further")
        target_quat = quat_aligning_approach(_CLASS_TARGETS[table[current]])

        pos_s, quat_s, ap_s = self._motion(self.scene.gripper.position, target_quat, 0.0)
        # Hold the new orientation long enough to register as sustained.
        hold = 4
        positions = np.concatenate([pos_s, np.repeat(pos_s[-1][None, :], hold, axis=0)])
        quats = np.concatenate([quat_s, np.repeat(quat_s[-1][None, :], hold, axis=0)])
        apertures = np.concatenate([ap_s, np.zeros(hold)])
        obj.orientation_class = HORIZONTAL if direction == language.TO_HORIZONTAL else UPRIGHT
        return self._append(positions, quats, apertures, held_object=obj.name)

    def _hold_failure(self, obj: ObjectState, reason: str) -> SkillOutcome:
        """A rejected in-hand action: two stationary steps, no state change."""
        g = self.scene.gripper
        positions = np.repeat(g.position[None, :], 2, axis=0)
        quats = np.repeat(g.wrist_orientation[None, :], 2, axis=0)
        apertures = np.full(2, g.aperture)
        return self._append(
            positions, quats, apertures,
            held_object=obj.name, success=False, reason=reason,
        )

    def exec_lift(self, object_name: str, lift_amount: float = 0.10) -> SkillOutcome:
        obj = self.find_object(object_name)
        if not obj.held:
            raise SimError(f"cannot lift {obj.name!r}: not held")
        target = self.scene.gripper.position + np.array([0.0, 0.0, lift_amount])
        positions, quats, apertures = self._motion(target, self.scene.gripper.wrist_orientation, 0.0)
        return self._append(positions, quats, apertures, held_object=obj.name)

    def exec_place(self, object_name: str) -> SkillOutcome:
        obj = self.find_object(object_name)
        if not obj.held:
            raise SimError(f"cannot place {obj.name!r}: not held")
        target = self.scene.gripper.position.copy()
        target[2] = self.scene.table_height
        pos_d, quat_d, ap_d = self._motion(target, self.scene.gripper.wrist_orientation, 0.0, steps=10)
        opening = np.array([0.2, 0.4, 0.6, 0.8, 1.0])
        positions = np.concatenate([pos_d, np.repeat(pos_d[-1][None, :], 5, axis=0)])
        quats = np.concatenate([quat_d, np.repeat(quat_d[-1][None, :], 5, axis=0)])
        apertures = np.concatenate([ap_d, opening])
        obj.position = positions[-1].copy()
        obj.held = False  # orientation_class deliberately untouched
        return self._append(positions, quats, apertures, held_object=obj.name, held_from=0)

    def exec_skill(self, call: SkillCall) -> SkillOutcome:
        if call.name is SkillKind.GRASP:
            return self.exec_grasp(call.object, call.modifier)
        if call.name is SkillKind.REORIENT:
            return self.exec_reorient(call.object, call.modifier)
        if call.name is SkillKind.LIFT:
            return self.exec_lift(call.object)
        return self.exec_place(call.object)


# -- episode synthesis ---------------------------------------------------------


@dataclass(frozen=True)
class NoiseConfig:
    """Sensor jitter layered onto synthesized trajectories."""

    quat_axis_deg: float = 0.0
    position_m: float = 0.0
    aperture: float = 0.0

    @property
    def active(self) -> bool:
        return self.quat_axis_deg > 0 or self.position_m > 0 or self.aperture > 0


def _batch_quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a[:, 0], a[:, 1], a[:, 2], a[:, 3]
    bw, bx, by, bz = b[:, 0], b[:, 1], b[:, 2], b[:, 3]
    out = np.empty_like(a)
    out[:, 0] = aw * bw - ax * bx - ay * by - az * bz
    out[:, 1] = aw * bx + ax * bw + ay * bz - az * by
    out[:, 2] = aw * by - ax * bz + ay * bw + az * bx
    out[:, 3] = aw * bz + ax * by - ay * bx + az * bw
    return out


def _apply_noise(positions, quats, apertures, noise: NoiseConfig, rng: np.random.Generator):
    n = apertures.shape[0]
    if noise.position_m > 0:
        positions = positions + rng.uniform(-noise.position_m, noise.position_m, size=(n, 3))
    if noise.quat_axis_deg > 0:
        axes = rng.normal(size=(n, 3))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        half = 0.5 * np.deg2rad(rng.uniform(0.0, noise.quat_axis_deg, size=n))
        jitter = np.concatenate([np.cos(half)[:, None], np.sin(half)[:, None] * axes], axis=1)
        quats = _batch_quat_multiply(jitter, quats)
    if noise.aperture > 0:
        apertures = np.clip(apertures + rng.uniform(-noise.aperture, noise.aperture, size=n), 0.0, 1.0)
    return positions, quats, apertures


def synth_episode(
    instruction: str,
    script: list[SkillCall],
    noise: NoiseConfig | None = None,
    seed: int = 0,
    episode_id: str = "ep-000000",
    min_steps: int | None = None,
) -> Episode:
    """Run a skill script in a fresh scene and package it as a labeled episode.

    The script must start with a grasp and respect hold/orientation order;
    violations raise :class:`ValueError` before any trajectory is built.
    Ground-truth segments record each scripted skill's (kind, modifier) and
    exact step span. Noise is applied after assembly and never breaks type
    invariants (quaternions are renormalized, apertures clipped).
    """
    parsed = parse_instruction(instruction)
    _validate_script(script, parsed.object_slot)

    place_rng = np.random.default_rng((seed, 1))
    x, y = 0.25 + place_rng.uniform(-0.05, 0.05), 0.5 + place_rng.uniform(-0.05, 0.05)
    obj = ObjectState(name=parsed.object_slot, position=np.array([x, y, 0.75]))
    session = SimSession(objects=[obj])

    spans: list[tuple[SkillCall, int, int]] = []
    for call in script:
        outcome = session.exec_skill(call)
        if not outcome.success:
            raise ValueError(f"script step failed in synthesis: {call} ({outcome.reason})")
        spans.append((call, outcome.start_index, outcome.end_index))

    positions, quats, apertures = session.trajectory_arrays()
    if min_steps is not None and positions.shape[0] < min_steps:
        pad = min_steps - positions.shape[0]
        positions = np.concatenate([positions, np.repeat(positions[-1][None, :], pad, axis=0)])
        quats = np.concatenate([quats, np.repeat(quats[-1][None, :], pad, axis=0)])
        apertures = np.concatenate([apertures, np.full(pad, apertures[-1])])
        call, start, _ = spans[-1]
        spans[-1] = (call, start, positions.shape[0] - 1)

    if noise is not None and noise.active:
        noise_rng = np.random.default_rng((seed, 2))
        positions, quats, apertures = _apply_noise(positions, quats, apertures, noise, noise_rng)

    # Quantize for compact wire lines, then renormalize quaternions.
    positions = np.round(positions, 6)
    apertures = np.round(apertures, 4)
    quats = np.round(quats / np.linalg.norm(quats, axis=1, keepdims=True), 7)

    gt = [
        SkillSegment(
            episode_id=episode_id,
            start_index=start,
            end_index=end,
            kind=call.name,
            object_slot=parsed.object_slot,
            modifier=call.modifier,
            rendered_instruction=_render_call_instruction(call),
        )
        for call, start, end in spans
    ]
    episode = Episode(
        episode_id=episode_id,
        instruction=instruction,
        positions=positions,
        quaternions=quats,
        apertures=apertures,
        ground_truth_segments=gt,
    )
    episode.validate()
    return episode


def _render_call_instruction(call: SkillCall) -> str:
    if call.name is SkillKind.GRASP:
        return language.render_grasp(call.object, GraspApproachClass.from_label(call.modifier))
    if call.name is SkillKind.REORIENT:
        return language.render_reorient(call.object, call.modifier)
    if call.name is SkillKind.LIFT:
        return language.render_lift(call.object)
    return language.render_place(call.object)


def _validate_script(script: list[SkillCall], object_slot: str) -> None:
    if not script:
        raise ValueError("empty skill script")
    if script[0].name is not SkillKind.GRASP:
        raise ValueError("script must start with a grasp")
    held = False
    orientation = UPRIGHT
    for call in script:
        if call.object != object_slot:
            raise ValueError(
                f"script call targets {call.object!r} but the episode is about {object_slot!r}"
            )
        if call.name is SkillKind.GRASP:
            if held:
                raise ValueError("grasp while already holding")
            held = True
        elif not held:
            raise ValueError(f"{call.name.value} before grasp")
        elif call.name is SkillKind.REORIENT:
            wants = HORIZONTAL if call.modifier == language.TO_HORIZONTAL else UPRIGHT
            if orientation == wants:
                raise ValueError(f"reorient {call.modifier} when already {orientation}")
            orientation = wants
        elif call.name is SkillKind.PLACE:
            held = False
