"""Parse original episode-level instructions into templates and object slots.

The source corpora use four fixed instruction templates:

    pick <object>
    move <object1> near <object2>
    knock <object>
    place <object> upright

Matching is case- and surrounding-whitespace-insensitive; slot text keeps its
original interior spacing and casing. Object names are never rewritten --
downstream policies are sensitive to exact naming, so slots flow through
verbatim.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class InstructionTemplate(Enum):
    PICK = "pick"
    MOVE_NEAR = "move_near"
    KNOCK = "knock"
    PLACE_UPRIGHT = "place_upright"


class InstructionParseError(ValueError):
    def __init__(self, code: str, text: str, detail: str = ""):
        super().__init__(f"{code}: {text!r}" + (f" ({detail})" if detail else ""))
        self.code = code
        self.text = text


@dataclass(frozen=True)
class ParsedInstruction:
    template: InstructionTemplate
    object_slot: str
    secondary_object_slot: str | None = None

    def render(self) -> str:
        """Reconstruct the canonical instruction text for this parse."""
        if self.template is InstructionTemplate.PICK:
            return f"pick {self.object_slot}"
        if self.template is InstructionTemplate.MOVE_NEAR:
            return f"move {self.object_slot} near {self.secondary_object_slot}"
        if self.template is InstructionTemplate.KNOCK:
            return f"knock {self.object_slot}"
        return f"place {self.object_slot} upright"


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def parse_instruction(text: str) -> ParsedInstruction:
    """Match an instruction against the four templates and extract its slots.

    Raises :class:`InstructionParseError` with code ``unknown_template`` when
    no template matches and ``empty_slot`` when a matched template has a
    blank object span.
    """
    normalized = _normalize(text)
    lowered = normalized.lower()

    if lowered == "pick" or lowered.startswith("pick "):
        slot = normalized[5:].strip()
        return _single_slot(InstructionTemplate.PICK, slot, text)

    if lowered == "knock" or lowered.startswith("knock "):
        slot = normalized[6:].strip()
        return _single_slot(InstructionTemplate.KNOCK, slot, text)

    if lowered.startswith("move "):
        rest = normalized[5:]
        # Objects may themselves contain "near"; the destination phrase is
        # taken from the last occurrence.
        split_at = rest.lower().rfind(" near ")
        if split_at < 0:
            raise InstructionParseError("unknown_template", text, "move without near")
        first = rest[:split_at].strip()
        second = rest[split_at + 6 :].strip()
        if not first or not second:
            raise InstructionParseError("empty_slot", text)
        return ParsedInstruction(InstructionTemplate.MOVE_NEAR, first, second)

    if lowered.startswith("place ") and lowered.endswith(" upright"):
        slot = normalized[6 : len(normalized) - 8].strip()
        return _single_slot(InstructionTemplate.PLACE_UPRIGHT, slot, text)

    raise InstructionParseError("unknown_template", text)


def _single_slot(
    template: InstructionTemplate, slot: str, original: str
) -> ParsedInstruction:
    if not slot:
        raise InstructionParseError("empty_slot", original)
    return ParsedInstruction(template, slot)
