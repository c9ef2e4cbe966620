"""Demonstration data model and line-delimited JSON episode/segment I/O.

Episodes are stored column-wise (numpy arrays over steps) so segmentation and
corpus annotation stay vectorized; :class:`TimeStep` views are materialized on
demand. The wire format is one JSON object per line:

Episode record::

    {"episode_id": str, "instruction": str,
     "steps": [{"t": int, "ee_pos": [x, y, z],
                "wrist_quat": [w, x, y, z], "gripper": float}, ...],
     "ground_truth_segments": [...]}        # optional, synthetic data only

Segment record::

    {"episode_id": str, "start": int, "end": int, "kind": str,
     "object": str, "modifier": str|null, "instruction": str}

Quaternions whose norm is within 1e-3 of unit are silently renormalized on
ingestion (sensor noise); anything further off is rejected as corrupt.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Iterable, Iterator

import numpy as np

# Norm drift tolerated before a quaternion is considered corrupt.
QUAT_REJECT_TOL = 1e-3


class SkillKind(Enum):
    GRASP = "grasp"
    REORIENT = "reorient"
    LIFT = "lift"
    PLACE = "place"


class RecordError(ValueError):
    """A single malformed wire record; carries the 1-based line number."""

    def __init__(self, line_number: int, reason: str):
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


@dataclass(frozen=True)
class TimeStep:
    """One proprioceptive sample: where the gripper is and how open it is."""

    index: int
    ee_position: np.ndarray  # (3,) meters, world frame, z up
    wrist_orientation: np.ndarray  # (4,) unit quaternion, scalar-first
    gripper_aperture: float  # 0 = fully closed, 1 = fully open


@dataclass
class SkillSegment:
    """A relabeled sub-trajectory: inclusive step span plus its new instruction."""

    episode_id: str
    start_index: int
    end_index: int
    kind: SkillKind
    object_slot: str
    modifier: str | None
    rendered_instruction: str

    def as_record(self, with_episode_id: bool = True) -> dict:
        rec = {"episode_id": self.episode_id} if with_episode_id else {}
        rec.update(
            start=self.start_index,
            end=self.end_index,
            kind=self.kind.value,
            object=self.object_slot,
            modifier=self.modifier,
            instruction=self.rendered_instruction,
        )
        return rec

    @classmethod
    def from_record(cls, rec: dict, episode_id: str | None = None) -> "SkillSegment":
        return cls(
            episode_id=episode_id if episode_id is not None else rec["episode_id"],
            start_index=int(rec["start"]),
            end_index=int(rec["end"]),
            kind=SkillKind(rec["kind"]),
            object_slot=rec["object"],
            modifier=rec["modifier"],
            rendered_instruction=rec["instruction"],
        )


@dataclass
class Episode:
    """One demonstration log, stored column-wise over steps."""

    episode_id: str
    instruction: str
    positions: np.ndarray  # (N, 3)
    quaternions: np.ndarray  # (N, 4), unit rows
    apertures: np.ndarray  # (N,)
    ground_truth_segments: list[SkillSegment] | None = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.float64)
        self.quaternions = np.asarray(self.quaternions, dtype=np.float64)
        self.apertures = np.asarray(self.apertures, dtype=np.float64)

    @property
    def n_steps(self) -> int:
        return int(self.apertures.shape[0])

    @property
    def steps(self) -> list[TimeStep]:
        return [
            TimeStep(i, self.positions[i], self.quaternions[i], float(self.apertures[i]))
            for i in range(self.n_steps)
        ]

    @classmethod
    def from_steps(
        cls,
        episode_id: str,
        instruction: str,
        steps: Iterable[TimeStep],
        ground_truth_segments: list[SkillSegment] | None = None,
    ) -> "Episode":
        steps = list(steps)
        return cls(
            episode_id=episode_id,
            instruction=instruction,
            positions=np.array([s.ee_position for s in steps], dtype=np.float64),
            quaternions=np.array([s.wrist_orientation for s in steps], dtype=np.float64),
            apertures=np.array([s.gripper_aperture for s in steps], dtype=np.float64),
            ground_truth_segments=ground_truth_segments,
        )

    def validate(self) -> None:
        """Raise ValueError when any type invariant is broken."""
        n = self.n_steps
        if n < 2:
            raise ValueError(f"episode {self.episode_id!r} has {n} steps; need at least 2")
        if self.positions.shape != (n, 3) or self.quaternions.shape != (n, 4):
            raise ValueError(f"episode {self.episode_id!r} has inconsistent step arrays")
        norms = np.linalg.norm(self.quaternions, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-6):
            raise ValueError(f"episode {self.episode_id!r} has non-unit quaternions")
        if np.any(self.apertures < 0.0) or np.any(self.apertures > 1.0):
            raise ValueError(f"episode {self.episode_id!r} has apertures outside [0, 1]")
        for seg in self.ground_truth_segments or []:
            if not (0 <= seg.start_index <= seg.end_index < n):
                raise ValueError(
                    f"episode {self.episode_id!r}: segment [{seg.start_index}, "
                    f"{seg.end_index}] outside step range"
                )


def parse_episode_line(line: str, line_number: int) -> Episode:
    """Parse one wire-format episode record, renormalizing quaternions.

    Raises :class:`RecordError` for malformed JSON, missing fields, apertures
    outside [0, 1], non-contiguous step indices, or quaternions further than
    1e-3 from unit norm ("degenerate orientation").
    """
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise RecordError(line_number, f"invalid JSON: {e.msg}") from e
    try:
        episode_id = rec["episode_id"]
        instruction = rec["instruction"]
        steps = rec["steps"]
        n = len(steps)
        if n < 2:
            raise RecordError(line_number, f"episode has {n} steps; need at least 2")
        t = np.array([s["t"] for s in steps], dtype=np.int64)
        positions = np.array([s["ee_pos"] for s in steps], dtype=np.float64)
        quats = np.array([s["wrist_quat"] for s in steps], dtype=np.float64)
        apertures = np.array([s["gripper"] for s in steps], dtype=np.float64)
        if positions.shape != (n, 3) or quats.shape != (n, 4):
            raise RecordError(line_number, "step vectors have wrong arity")
    except RecordError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as e:
        raise RecordError(line_number, f"malformed record: {e}") from e

    if not np.array_equal(t, np.arange(n)):
        raise RecordError(line_number, "step indices are not contiguous from 0")
    if np.any(apertures < 0.0) or np.any(apertures > 1.0):
        raise RecordError(line_number, "aperture out of range")
    norms = np.linalg.norm(quats, axis=1)
    drift = np.abs(norms - 1.0)
    if np.any(drift > QUAT_REJECT_TOL):
        raise RecordError(line_number, "degenerate orientation")
    # Renormalize only rows that actually drifted, so reading back a valid
    # episode reproduces it bit for bit.
    off = drift > 1e-12
    if off.any():
        quats[off] /= norms[off, None]

    gt = None
    if rec.get("ground_truth_segments") is not None:
        gt = [SkillSegment.from_record(g, episode_id) for g in rec["ground_truth_segments"]]
    return Episode(
        episode_id=episode_id,
        instruction=instruction,
        positions=positions,
        quaternions=quats,
        apertures=apertures,
        ground_truth_segments=gt,
    )


def episode_to_line(episode: Episode) -> str:
    """Serialize an episode to its one-line wire form (no trailing newline)."""
    # tolist() converts whole columns at C speed; this path serializes
    # 70K-episode corpora, so per-element float() casts are too slow.
    steps = [
        {"t": i, "ee_pos": p, "wrist_quat": q, "gripper": g}
        for i, (p, q, g) in enumerate(
            zip(
                episode.positions.tolist(),
                episode.quaternions.tolist(),
                episode.apertures.tolist(),
            )
        )
    ]
    rec = {
        "episode_id": episode.episode_id,
        "instruction": episode.instruction,
        "steps": steps,
    }
    if episode.ground_truth_segments is not None:
        rec["ground_truth_segments"] = [
            s.as_record(with_episode_id=False) for s in episode.ground_truth_segments
        ]
    return json.dumps(rec, separators=(",", ":"))


def read_episodes(source: IO[str] | Iterable[str]) -> Iterator[Episode]:
    """Stream episodes from line-delimited records, preserving input order.

    Blank lines are skipped. Malformed records raise :class:`RecordError`
    immediately; callers that need to keep going (the corpus pipeline)
    parse line-by-line with :func:`parse_episode_line` and collect
    diagnostics instead.
    """
    for line_number, line in enumerate(source, start=1):
        if not line.strip():
            continue
        yield parse_episode_line(line, line_number)


def write_episodes(episodes: Iterable[Episode], sink: IO[str]) -> None:
    for ep in episodes:
        sink.write(episode_to_line(ep))
        sink.write("\n")


def segment_to_line(segment: SkillSegment) -> str:
    return json.dumps(segment.as_record(), separators=(",", ":"))


def parse_segment_line(line: str, line_number: int) -> SkillSegment:
    try:
        rec = json.loads(line)
        seg = SkillSegment.from_record(rec)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise RecordError(line_number, f"malformed segment record: {e}") from e
    if not (0 <= seg.start_index <= seg.end_index):
        raise RecordError(line_number, "segment span is not ordered")
    return seg


def write_segments(segments: Iterable[SkillSegment], sink: IO[str]) -> None:
    """Write one wire record per segment; reading the output back round-trips."""
    for seg in segments:
        sink.write(segment_to_line(seg))
        sink.write("\n")


def read_segments(source: IO[str] | Iterable[str]) -> Iterator[SkillSegment]:
    for line_number, line in enumerate(source, start=1):
        if not line.strip():
            continue
        yield parse_segment_line(line, line_number)
