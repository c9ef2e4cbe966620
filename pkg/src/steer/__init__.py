"""Relabel robot demonstration logs into composable, language-indexed skills.

The pieces, bottom to top: quaternion/anchor geometry (:mod:`steer.geometry`),
the episode data model and wire I/O (:mod:`steer.trajectory`), instruction
templates (:mod:`steer.instructions`, :mod:`steer.language`), event detection
and relabeling (:mod:`steer.segmenter`), corpus-scale annotation and dataset
mixing (:mod:`steer.pipeline`), a kinematic tabletop simulator and episode
synthesis (:mod:`steer.sim`, :mod:`steer.synth`), the plan DSL and planners
(:mod:`steer.dsl`, :mod:`steer.orchestrator`), and a session service
(:mod:`steer.gateway`).
"""

from .geometry import (
    Anchor,
    AnchorSet,
    GraspApproachClass,
    approach_vector,
    build_anchor_set,
    classify_anchor,
    cluster_grasps,
    nearest_anchor,
)
from .instructions import ParsedInstruction, parse_instruction
from .segmenter import (
    Diagnostic,
    GraspEvent,
    ReorientEvent,
    SegmenterConfig,
    detect_grasp_events,
    detect_reorientations,
    detect_terminal,
    segment_episode,
)
from .trajectory import (
    Episode,
    RecordError,
    SkillKind,
    SkillSegment,
    TimeStep,
    read_episodes,
    read_segments,
    write_episodes,
    write_segments,
)
from .dsl import Plan, PlanSyntaxError, SkillCall, parse_plan, render_language, render_plan
from .orchestrator import (
    PlannerMemory,
    PlannerRequest,
    RemotePlanner,
    ScriptedPlanner,
    execute_plan,
    propose_plan,
    validate_plan,
)
from .pipeline import CorpusReport, MixManifest, annotate_corpus, build_mix, corpus_stats
from .sim import NoiseConfig, SceneState, SimSession, SkillOutcome, reset, synth_episode
from .synth import ScriptSpec, SynthSpec, synth_corpus

__version__ = "0.1.0"

__all__ = [
    "Anchor",
    "AnchorSet",
    "CorpusReport",
    "Diagnostic",
    "Episode",
    "GraspApproachClass",
    "GraspEvent",
    "MixManifest",
    "NoiseConfig",
    "ParsedInstruction",
    "Plan",
    "PlannerMemory",
    "PlannerRequest",
    "PlanSyntaxError",
    "RecordError",
    "RemotePlanner",
    "ReorientEvent",
    "SceneState",
    "ScriptedPlanner",
    "ScriptSpec",
    "SegmenterConfig",
    "SimSession",
    "SkillCall",
    "SkillKind",
    "SkillOutcome",
    "SkillSegment",
    "SynthSpec",
    "TimeStep",
    "annotate_corpus",
    "approach_vector",
    "build_anchor_set",
    "build_mix",
    "classify_anchor",
    "cluster_grasps",
    "corpus_stats",
    "detect_grasp_events",
    "detect_reorientations",
    "detect_terminal",
    "execute_plan",
    "nearest_anchor",
    "parse_instruction",
    "parse_plan",
    "propose_plan",
    "read_episodes",
    "read_segments",
    "render_language",
    "render_plan",
    "reset",
    "segment_episode",
    "synth_corpus",
    "synth_episode",
    "validate_plan",
    "write_episodes",
    "write_segments",
]
