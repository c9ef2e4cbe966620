"""Skill-instruction templates shared by the relabeler and the plan renderer.

Every natural-language instruction the system emits comes from the four
templates below; nothing else ever constructs these strings, so the
relabeled corpus and the plan executor speak byte-identical language.

    grasp the <object> in a <approach> grasp      approach: top-down | side | diagonal
    reorient the <object> to be <direction>       direction: horizontal | upright
    hold and lift the <object>
    place the <object>
"""

from __future__ import annotations

import re

from .geometry import GraspApproachClass
from .trajectory import SkillKind

TO_HORIZONTAL = "to_horizontal"
TO_UPRIGHT = "to_upright"

REORIENT_DIRECTIONS = (TO_HORIZONTAL, TO_UPRIGHT)

# Internal direction name -> surface form used in instruction text.
DIRECTION_SURFACE = {TO_HORIZONTAL: "horizontal", TO_UPRIGHT: "upright"}

GRASP_MODIFIERS = ("top-down", "side", "diagonal")


class UnlabeledGraspModeError(ValueError):
    """Raised for grasp modes outside the labeled taxonomy (upward grasps)."""


def render_grasp(object_slot: str, approach: GraspApproachClass) -> str:
    if approach is GraspApproachClass.UPWARD:
        raise UnlabeledGraspModeError(
            f"unlabeled grasp mode for {object_slot!r}: upward approaches are not "
            "part of the grasp taxonomy"
        )
    return f"grasp the {object_slot} in a {approach.label} grasp"


def render_reorient(object_slot: str, direction: str) -> str:
    return f"reorient the {object_slot} to be {DIRECTION_SURFACE[direction]}"


def render_lift(object_slot: str) -> str:
    return f"hold and lift the {object_slot}"


def render_place(object_slot: str) -> str:
    return f"place the {object_slot}"


_GRASP_RE = re.compile(r"^grasp the (.+) in a (top-down|side|diagonal) grasp$")
_REORIENT_RE = re.compile(r"^reorient the (.+) to be (horizontal|upright)$")
_LIFT_RE = re.compile(r"^hold and lift the (.+)$")
_PLACE_RE = re.compile(r"^place the (.+)$")


def parse_skill_instruction(text: str) -> tuple[SkillKind, str, str | None]:
    """Reverse grammar for the templates: (kind, object, modifier) or ValueError.

    The inverse of the render functions; used to check that emitted
    instructions stay inside the template language.
    """
    m = _GRASP_RE.match(text)
    if m:
        return SkillKind.GRASP, m.group(1), m.group(2)
    m = _REORIENT_RE.match(text)
    if m:
        direction = TO_HORIZONTAL if m.group(2) == "horizontal" else TO_UPRIGHT
        return SkillKind.REORIENT, m.group(1), direction
    m = _LIFT_RE.match(text)
    if m:
        return SkillKind.LIFT, m.group(1), None
    m = _PLACE_RE.match(text)
    if m:
        return SkillKind.PLACE, m.group(1), None
    raise ValueError(f"not a skill instruction: {text!r}")
