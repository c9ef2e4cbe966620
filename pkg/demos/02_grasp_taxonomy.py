"""How grasp poses become words: approach vectors, anchors, and clustering.

A wrist orientation is reduced to the direction the gripper approaches
from -- the canonical axis (0, 1, 0) rotated by the wrist quaternion -- and
that direction is labeled by its nearest anchor under cosine similarity.
"""

import numpy as np

from steer.geometry import (
    approach_vector,
    build_anchor_set,
    cluster_grasps,
    nearest_anchor,
    quat_aligning_approach,
)

anchors = build_anchor_set()

# 26 anchors: all {-1, 0, 1} component combinations minus the zero triple.
print(f"{len(anchors)} anchor directions")
by_class = {}
for anchor in anchors:
    by_class.setdefault(anchor.semantic_class.value, []).append(anchor.id)
for name, ids in sorted(by_class.items()):
    print(f"  {name:9s} x{len(ids):2d}  ids {ids}")

# A straight-down wrist claims the lone top_down anchor.
q = quat_aligning_approach([0.0, 0.0, -1.0])
v = approach_vector(q)
print(f"\nstraight-down approach {np.round(v, 3)} -> "
      f"{nearest_anchor(v, anchors).semantic_class.value}")

# Jitter doesn't move it off the anchor: 5 degrees is well inside the cell.
rng = np.random.default_rng(0)
jittered = v + rng.normal(scale=0.05, size=3)
print(f"jittered              {np.round(jittered, 3)} -> "
      f"{nearest_anchor(jittered, anchors).semantic_class.value}")

# Cluster a bag of simulated grasp directions and read off the modes,
# the same inspection used to name the classes in the first place.
n = 1000
downish = rng.normal(size=(n // 2, 3)) * 0.25 + [0, 0, -1]
sideish = rng.normal(size=(n // 2, 3)) * 0.25 + [0, 1, 0]
grasps = np.vstack([downish, sideish])
grasps /= np.linalg.norm(grasps, axis=1, keepdims=True)

report = cluster_grasps(grasps, anchors)
print(f"\nclustered {report.total} grasps into {report.occupied_anchor_count} occupied anchors")
for anchor_id, count in sorted(report.counts.items(), key=lambda kv: -kv[1])[:6]:
    anchor = anchors[anchor_id]
    direction = np.round(anchor.direction, 2)
    print(f"  anchor {anchor_id:2d} {direction}  {anchor.semantic_class.value:9s} {count:4d}")
