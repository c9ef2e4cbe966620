"""Grasp-pose geometry: approach vectors, anchor directions, nearest-neighbor classification.

A grasp pose is summarized by its *approach vector*: the canonical gripper
axis (0, 1, 0) rotated by the wrist quaternion. Approach vectors are
classified against a fixed set of 26 *anchor* directions, the normalized
nonzero vectors whose components are drawn from {-1, 0, 1}. (All 27
component combinations include the zero triple, which has no direction and
cannot be normalized, so the anchor set has 26 members.) Each anchor
carries a semantic class -- top-down, side, diagonal, or upward -- and an
arbitrary grasp is labeled with the class of its nearest anchor under
cosine similarity.

Quaternions are scalar-first (w, x, y, z) throughout.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

UNIT_TOL = 1e-6

# Boundaries on the z-component separating the semantic classes. The exact
# downward anchor is the only top_down member; the eight horizontal anchors
# are side; the eight downward diagonals are diagonal; everything pointing
# meaningfully upward gets its own class so classification is total.
_TOP_DOWN_Z = -0.9
_SIDE_Z = 0.3


class GraspApproachClass(Enum):
    """Semantic label for a grasp approach direction."""

    TOP_DOWN = "top_down"
    SIDE = "side"
    DIAGONAL = "diagonal"
    UPWARD = "upward"

    @property
    def label(self) -> str:
        """Surface form used in rendered instructions ("top-down", "side", ...)."""
        return _SURFACE_FORMS[self]

    @classmethod
    def from_label(cls, label: str) -> "GraspApproachClass":
        for klass, surface in _SURFACE_FORMS.items():
            if label == surface or label == klass.value:
                return klass
        raise ValueError(f"unknown grasp approach label: {label!r}")


_SURFACE_FORMS = {
    GraspApproachClass.TOP_DOWN: "top-down",
    GraspApproachClass.SIDE: "side",
    GraspApproachClass.DIAGONAL: "diagonal",
    GraspApproachClass.UPWARD: "upward",
}

# Rank of how vertical an approach class is; used to orient a class switch
# as a reorientation toward horizontal (rank increases) or upright (rank
# decreases). top_down and upward share the top rank: both are far from a
# side carry.
VERTICALITY_RANK = {
    GraspApproachClass.SIDE: 0,
    GraspApproachClass.DIAGONAL: 1,
    GraspApproachClass.TOP_DOWN: 2,
    GraspApproachClass.UPWARD: 2,
}


@dataclass(frozen=True, eq=False)
class Anchor:
    """One reference grasp direction with its semantic class."""

    id: int
    direction: np.ndarray
    semantic_class: GraspApproachClass

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "direction": [float(c) for c in self.direction],
            "class": self.semantic_class.value,
        }


class AnchorSet:
    """Ordered, immutable collection of anchors plus vectorized lookup tables."""

    def __init__(self, anchors: list[Anchor]):
        self._anchors = list(anchors)
        self.directions = np.array([a.direction for a in anchors], dtype=np.float64)
        self.classes = [a.semantic_class for a in anchors]
        self.class_codes = np.array(
            [_CLASS_CODES[a.semantic_class] for a in anchors], dtype=np.int8
        )

    def __len__(self) -> int:
        return len(self._anchors)

    def __iter__(self):
        return iter(self._anchors)

    def __getitem__(self, i: int) -> Anchor:
        return self._anchors[i]

    def to_json(self) -> str:
        """Serialize the anchor table (id, direction, class) for export."""
        return json.dumps([a.as_dict() for a in self._anchors], indent=2)


# Stable integer codes for vectorized per-step classification.
_CLASS_CODES = {
    GraspApproachClass.TOP_DOWN: 0,
    GraspApproachClass.SIDE: 1,
    GraspApproachClass.DIAGONAL: 2,
    GraspApproachClass.UPWARD: 3,
}
CLASS_BY_CODE = {code: klass for klass, code in _CLASS_CODES.items()}


def quat_norm_error(q: np.ndarray) -> float:
    return abs(float(np.linalg.norm(q)) - 1.0)


def normalize_quaternion(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    return q / np.linalg.norm(q)


def approach_vector(q) -> np.ndarray:
    """Rotate the canonical gripper axis (0, 1, 0) by the wrist quaternion.

    ``q`` must be unit length to within 1e-6. The result is the middle
    column of the quaternion's rotation matrix and is always unit length.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (4,):
        raise ValueError(f"expected quaternion of shape (4,), got {q.shape}")
    if quat_norm_error(q) > UNIT_TOL:
        raise ValueError(
            f"approach_vector requires a unit quaternion (|norm - 1| <= {UNIT_TOL}); "
            f"got norm {np.linalg.norm(q):.9f}"
        )
    w, x, y, z = q
    return np.array(
        [2.0 * (x * y - w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z + w * x)]
    )


def approach_vectors(quats: np.ndarray) -> np.ndarray:
    """Vectorized :func:`approach_vector` for an (N, 4) array of unit quaternions."""
    q = np.asarray(quats, dtype=np.float64)
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    out = np.empty((q.shape[0], 3), dtype=np.float64)
    out[:, 0] = 2.0 * (x * y - w * z)
    out[:, 1] = 1.0 - 2.0 * (x * x + z * z)
    out[:, 2] = 2.0 * (y * z + w * x)
    return out


def classify_anchor(direction) -> GraspApproachClass:
    """Semantic class of a unit direction, a pure function of its z-component."""
    z = float(direction[2])
    if z < _TOP_DOWN_Z:
        return GraspApproachClass.TOP_DOWN
    if z < -_SIDE_Z:
        return GraspApproachClass.DIAGONAL
    if z <= _SIDE_Z:
        return GraspApproachClass.SIDE
    return GraspApproachClass.UPWARD


def build_anchor_set() -> AnchorSet:
    """Enumerate the 26 anchor directions in lexicographic component order.

    Components run over {-1, 0, 1} per axis; the zero triple is skipped.
    Ids are assigned in enumeration order, so the mapping is deterministic.
    """
    anchors = []
    next_id = 0
    for combo in itertools.product((-1, 0, 1), repeat=3):
        if combo == (0, 0, 0):
            continue
        direction = np.array(combo, dtype=np.float64)
        direction /= np.linalg.norm(direction)
        anchors.append(Anchor(next_id, direction, classify_anchor(direction)))
        next_id += 1
    return AnchorSet(anchors)


_DEFAULT_ANCHORS: AnchorSet | None = None


def default_anchor_set() -> AnchorSet:
    """Shared immutable anchor set; building it is deterministic, so cache it."""
    global _DEFAULT_ANCHORS
    if _DEFAULT_ANCHORS is None:
        _DEFAULT_ANCHORS = build_anchor_set()
    return _DEFAULT_ANCHORS


def nearest_anchor(v, anchors: AnchorSet) -> Anchor:
    """Anchor maximizing cosine similarity with ``v``; ties go to the lowest id."""
    if len(anchors) == 0:
        raise ValueError("anchor set is empty")
    v = np.asarray(v, dtype=np.float64)
    # argmax returns the first maximal index, which is the lowest anchor id.
    return anchors[int(np.argmax(anchors.directions @ v))]


def nearest_anchor_ids(vectors: np.ndarray, anchors: AnchorSet) -> np.ndarray:
    """Vectorized nearest-anchor assignment for an (N, 3) array of vectors."""
    if len(anchors) == 0:
        raise ValueError("anchor set is empty")
    sims = np.asarray(vectors, dtype=np.float64) @ anchors.directions.T
    return np.argmax(sims, axis=1)


@dataclass
class ClusterReport:
    """Per-anchor assignment counts for a batch of grasp approach vectors."""

    counts: dict[int, int]
    occupied_anchor_count: int
    total: int


def cluster_grasps(vectors, anchors: AnchorSet) -> ClusterReport:
    """Assign each approach vector to its nearest anchor and tally the clusters."""
    vecs = np.asarray(vectors, dtype=np.float64)
    if vecs.size == 0:
        return ClusterReport(counts={}, occupied_anchor_count=0, total=0)
    ids = nearest_anchor_ids(vecs.reshape(-1, 3), anchors)
    unique, tallies = np.unique(ids, return_counts=True)
    counts = {int(i): int(n) for i, n in zip(unique, tallies)}
    return ClusterReport(
        counts=counts, occupied_anchor_count=len(counts), total=int(ids.shape[0])
    )


def quat_slerp(q0: np.ndarray, q1: np.ndarray, t: float) -> np.ndarray:
    """Spherical-linear interpolation between two unit quaternions."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:  # take the short arc
        q1 = -q1
        dot = -dot
    if dot > 0.9995:
        out = q0 + t * (q1 - q0)
        return out / np.linalg.norm(out)
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    s = np.sin(theta)
    return (np.sin((1.0 - t) * theta) * q0 + np.sin(t * theta) * q1) / s


def quat_slerp_path(q0: np.ndarray, q1: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """Slerp sampled at many interpolation parameters at once: (len(ts), 4)."""
    q0 = np.asarray(q0, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 0.9995:
        out = q0[None, :] + ts[:, None] * (q1 - q0)[None, :]
        return out / np.linalg.norm(out, axis=1, keepdims=True)
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    s = np.sin(theta)
    return (
        np.sin((1.0 - ts) * theta)[:, None] * q0[None, :]
        + np.sin(ts * theta)[:, None] * q1[None, :]
    ) / s


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    """Unit quaternion rotating by ``angle`` radians about ``axis``."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate(([np.cos(half)], np.sin(half) * axis))


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a * b of two scalar-first quaternions."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_aligning_approach(target) -> np.ndarray:
    """A unit quaternion whose approach vector equals ``target`` (unit 3-vector).

    Rotates (0, 1, 0) onto the target about the axis perpendicular to both.
    The antipodal case (target = (0, -1, 0)) rotates about z.
    """
    target = np.asarray(target, dtype=np.float64)
    target = target / np.linalg.norm(target)
    ey = np.array([0.0, 1.0, 0.0])
    dot = float(np.dot(ey, target))
    if dot > 1.0 - 1e-12:
        return np.array([1.0, 0.0, 0.0, 0.0])
    if dot < -1.0 + 1e-12:
        return quat_from_axis_angle([0.0, 0.0, 1.0], np.pi)
    axis = np.cross(ey, target)
    return quat_from_axis_angle(axis, float(np.arccos(np.clip(dot, -1.0, 1.0))))
