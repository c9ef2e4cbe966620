"""Detect grasp, reorientation, and lift/place events and relabel episodes.

Event detection works entirely on proprioception. A grasp is an aperture
crossing from fully open to fully closed (with hysteresis: both thresholds
must be crossed). While the gripper stays closed, the wrist's nearest-anchor
class is tracked per step; a class change that persists for at least
``reorient_dwell`` steps is a reorientation, oriented by whether the new
class is more vertical (object tilted toward horizontal) or less (object
brought back upright). The episode terminal is a lift when the gripper is
still closed at the end and has gained height, or a place when the gripper
reopened after the last grasp.

Segments partition the episode from step 0 through the last labeled
boundary; steps between events (transport, settling) are absorbed into the
following segment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import language
from .geometry import (
    CLASS_BY_CODE,
    VERTICALITY_RANK,
    AnchorSet,
    GraspApproachClass,
    approach_vectors,
    default_anchor_set,
)
from .instructions import ParsedInstruction
from .trajectory import Episode, SkillKind, SkillSegment


@dataclass(frozen=True)
class SegmenterConfig:
    """Thresholds operationalizing "fully open", "fully closed", and "lifted"."""

    open_threshold: float = 0.95
    closed_threshold: float = 0.05
    reorient_dwell: int = 3  # steps a new orientation class must persist
    lift_height: float = 0.05  # meters of upward travel that count as a lift
    smoothing_window: int = 1  # aperture median filter; 1 = off

    def __post_init__(self):
        if not (0.0 <= self.closed_threshold < self.open_threshold <= 1.0):
            raise ValueError("need 0 <= closed_threshold < open_threshold <= 1")
        if self.reorient_dwell < 1:
            raise ValueError("reorient_dwell must be >= 1")
        if self.lift_height <= 0.0:
            raise ValueError("lift_height must be positive")
        if self.smoothing_window < 1 or self.smoothing_window % 2 == 0:
            raise ValueError("smoothing_window must be a positive odd integer")


@dataclass(frozen=True)
class GraspEvent:
    step_index: int
    approach: GraspApproachClass
    anchor_id: int


@dataclass(frozen=True)
class ReorientEvent:
    end_step: int
    from_class: GraspApproachClass
    to_class: GraspApproachClass
    direction: str  # language.TO_HORIZONTAL | language.TO_UPRIGHT


@dataclass(frozen=True)
class Diagnostic:
    """Structured per-episode problem report emitted by the pipeline."""

    episode_id: str
    code: str  # no_grasp | unknown_template | unlabeled_grasp_mode | empty_slot
    detail: str = ""

    def as_record(self) -> dict:
        return {"episode_id": self.episode_id, "code": self.code, "detail": self.detail}


@dataclass
class SegmentationResult:
    segments: list[SkillSegment] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)


def smooth_apertures(apertures: np.ndarray, window: int) -> np.ndarray:
    """Median-filter the aperture signal with edge replication; window 1 is a no-op."""
    if window == 1:
        return apertures
    half = window // 2
    padded = np.pad(apertures, half, mode="edge")
    windows = np.lib.stride_tricks.sliding_window_view(padded, window)
    return np.median(windows, axis=1)


def _aperture_states(apertures: np.ndarray, config: SegmenterConfig) -> np.ndarray:
    """Per-step gripper state: +1 fully open, -1 fully closed, 0 in between."""
    states = np.zeros(apertures.shape[0], dtype=np.int8)
    states[apertures >= config.open_threshold] = 1
    states[apertures <= config.closed_threshold] = -1
    return states


def _step_class_codes(episode: Episode, anchors: AnchorSet) -> np.ndarray:
    vecs = approach_vectors(episode.quaternions)
    sims = vecs @ anchors.directions.T
    return anchors.class_codes[np.argmax(sims, axis=1)]


def detect_grasp_events(
    episode: Episode,
    config: SegmenterConfig = SegmenterConfig(),
    anchors: AnchorSet | None = None,
) -> list[GraspEvent]:
    """One event per fully-open to fully-closed aperture transition.

    The event lands on the first step at or below the closed threshold; its
    approach class comes from the wrist quaternion at that step.
    """
    anchors = anchors if anchors is not None else default_anchor_set()
    apertures = smooth_apertures(episode.apertures, config.smoothing_window)
    states = _aperture_states(apertures, config)
    events: list[GraspEvent] = []
    armed = False
    for idx in np.flatnonzero(states):
        if states[idx] > 0:
            armed = True
        elif armed:
            vec = approach_vectors(episode.quaternions[int(idx)][None, :])[0]
            anchor_idx = int(np.argmax(anchors.directions @ vec))
            anchor = anchors[anchor_idx]
            events.append(GraspEvent(int(idx), anchor.semantic_class, anchor.id))
            armed = False
    return events


def _closed_runs(states: np.ndarray) -> list[tuple[int, int]]:
    """Maximal [start, end] index runs where the gripper is fully closed."""
    closed = states < 0
    if not closed.any():
        return []
    diff = np.diff(closed.astype(np.int8))
    starts = [int(i) + 1 for i in np.flatnonzero(diff == 1)]
    ends = [int(i) for i in np.flatnonzero(diff == -1)]
    if closed[0]:
        starts.insert(0, 0)
    if closed[-1]:
        ends.append(len(states) - 1)
    return list(zip(starts, ends))


def _class_runs(codes: np.ndarray, start: int, end: int) -> list[tuple[int, int, int]]:
    """Run-length encode codes[start:end+1] as (code, run_start, run_length)."""
    span = codes[start : end + 1]
    change = np.flatnonzero(np.diff(span)) + 1
    boundaries = np.concatenate(([0], change, [span.shape[0]]))
    return [
        (int(span[boundaries[i]]), start + int(boundaries[i]), int(boundaries[i + 1] - boundaries[i]))
        for i in range(len(boundaries) - 1)
    ]


def reorient_direction(
    from_class: GraspApproachClass, to_class: GraspApproachClass
) -> str:
    """Orient a wrist-class switch: more vertical means the object tilted horizontal.

    Switches between the two maximally vertical classes (top_down/upward)
    have no defined tilt sense; they are reported as to_horizontal.
    """
    if VERTICALITY_RANK[to_class] < VERTICALITY_RANK[from_class]:
        return language.TO_UPRIGHT
    return language.TO_HORIZONTAL


def detect_reorientations(
    episode: Episode,
    grasp_events: list[GraspEvent],
    config: SegmenterConfig = SegmenterConfig(),
    anchors: AnchorSet | None = None,
) -> list[ReorientEvent]:
    """Sustained wrist-class switches while the gripper is closed and holding.

    Only closed spans at or after the first grasp are tracked. A new class
    must persist for ``reorient_dwell`` consecutive steps to count; shorter
    excursions are treated as noise and do not move the reference class.
    """
    if not grasp_events:
        return []
    anchors = anchors if anchors is not None else default_anchor_set()
    apertures = smooth_apertures(episode.apertures, config.smoothing_window)
    states = _aperture_states(apertures, config)
    codes = _step_class_codes(episode, anchors)
    first_grasp = grasp_events[0].step_index

    events: list[ReorientEvent] = []
    for run_start, run_end in _closed_runs(states):
        if run_end < first_grasp:
            continue
        start = max(run_start, first_grasp)
        stable: int | None = None
        for code, seg_start, seg_len in _class_runs(codes, start, run_end):
            if stable is None:
                stable = code
                continue
            if code == stable or seg_len < config.reorient_dwell:
                continue
            from_class = CLASS_BY_CODE[stable]
            to_class = CLASS_BY_CODE[code]
            events.append(
                ReorientEvent(
                    end_step=seg_start,
                    from_class=from_class,
                    to_class=to_class,
                    direction=reorient_direction(from_class, to_class),
                )
            )
            stable = code
    return events


def detect_terminal(
    episode: Episode,
    grasp_events: list[GraspEvent],
    config: SegmenterConfig = SegmenterConfig(),
    reorient_events: list[ReorientEvent] | None = None,
) -> SkillKind | None:
    """Closing label for the episode: LIFT, PLACE, or None.

    Lift: still fully closed at the final step and the gripper gained at
    least ``lift_height`` since the last event boundary. Place: the gripper
    reopened after the last grasp.
    """
    if not grasp_events:
        return None
    apertures = smooth_apertures(episode.apertures, config.smoothing_window)
    last_grasp = grasp_events[-1].step_index
    boundary = last_grasp
    if reorient_events:
        boundary = max(boundary, max(e.end_step for e in reorient_events))

    if apertures[-1] <= config.closed_threshold:
        rise = episode.positions[-1, 2] - episode.positions[boundary, 2]
        if rise >= config.lift_height:
            return SkillKind.LIFT
        return None
    after = apertures[last_grasp + 1 :]
    if after.size and np.any(after >= config.open_threshold):
        return SkillKind.PLACE
    return None


def _release_step(states: np.ndarray, after: int) -> int | None:
    """First fully-open step strictly after ``after``, if any."""
    opens = np.flatnonzero(states[after + 1 :] > 0)
    if opens.size == 0:
        return None
    return int(after + 1 + opens[0])


def segment_episode(
    episode: Episode,
    parsed: ParsedInstruction,
    config: SegmenterConfig = SegmenterConfig(),
    anchors: AnchorSet | None = None,
) -> SegmentationResult:
    """Partition an episode into relabeled skill segments.

    Emits, in temporal order: a grasp segment from the previous boundary
    (step 0 for the first grasp) to the grasp step, one segment per
    reorientation ending at the first sustained step of its new class, and a
    terminal lift/place segment running to the final step. Episodes with
    several grasps produce one chain per grasp, all sharing the original
    instruction's object slot. Unlabelable events become diagnostics, never
    crashes.
    """
    anchors = anchors if anchors is not None else default_anchor_set()
    result = SegmentationResult()
    obj = parsed.object_slot

    grasps = detect_grasp_events(episode, config, anchors)
    if not grasps:
        result.diagnostics.append(
            Diagnostic(episode.episode_id, "no_grasp", "gripper never fully closed after being open")
        )
        return result

    reorients = detect_reorientations(episode, grasps, config, anchors)
    terminal = detect_terminal(episode, grasps, config, reorients)
    apertures = smooth_apertures(episode.apertures, config.smoothing_window)
    states = _aperture_states(apertures, config)
    last_step = episode.n_steps - 1

    boundary = -1  # last labeled step
    for chain_idx, grasp in enumerate(grasps):
        is_last_chain = chain_idx == len(grasps) - 1
        next_grasp_step = grasps[chain_idx + 1].step_index if not is_last_chain else None

        try:
            grasp_text = language.render_grasp(obj, grasp.approach)
        except language.UnlabeledGraspModeError as e:
            result.diagnostics.append(
                Diagnostic(episode.episode_id, "unlabeled_grasp_mode", str(e))
            )
            # The chain cannot be labeled without its grasp; skip to the next.
            boundary = grasp.step_index
            continue

        result.segments.append(
            SkillSegment(
                episode_id=episode.episode_id,
                start_index=boundary + 1,
                end_index=grasp.step_index,
                kind=SkillKind.GRASP,
                object_slot=obj,
                modifier=grasp.approach.label,
                rendered_instruction=grasp_text,
            )
        )
        boundary = grasp.step_index

        chain_end = next_grasp_step if next_grasp_step is not None else last_step
        for ev in reorients:
            if ev.end_step <= grasp.step_index or ev.end_step > chain_end:
                continue
            result.segments.append(
                SkillSegment(
                    episode_id=episode.episode_id,
                    start_index=boundary + 1,
                    end_index=ev.end_step,
                    kind=SkillKind.REORIENT,
                    object_slot=obj,
                    modifier=ev.direction,
                    rendered_instruction=language.render_reorient(obj, ev.direction),
                )
            )
            boundary = ev.end_step

        if is_last_chain:
            if terminal is SkillKind.LIFT:
                result.segments.append(
                    SkillSegment(
                        episode_id=episode.episode_id,
                        start_index=boundary + 1,
                        end_index=last_step,
                        kind=SkillKind.LIFT,
                        object_slot=obj,
                        modifier=None,
                        rendered_instruction=language.render_lift(obj),
                    )
                )
                boundary = last_step
            elif terminal is SkillKind.PLACE:
                result.segments.append(
                    SkillSegment(
                        episode_id=episode.episode_id,
                        start_index=boundary + 1,
                        end_index=last_step,
                        kind=SkillKind.PLACE,
                        object_slot=obj,
                        modifier=None,
                        rendered_instruction=language.render_place(obj),
                    )
                )
                boundary = last_step
        else:
            # Intermediate chain: the release before the next grasp is a place.
            release = _release_step(states, boundary)
            if release is not None and release < grasps[chain_idx + 1].step_index:
                result.segments.append(
                    SkillSegment(
                        episode_id=episode.episode_id,
                        start_index=boundary + 1,
                        end_index=release,
                        kind=SkillKind.PLACE,
                        object_slot=obj,
                        modifier=None,
                        rendered_instruction=language.render_place(obj),
                    )
                )
                boundary = release

    return result
