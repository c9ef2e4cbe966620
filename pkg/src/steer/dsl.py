"""The plan language: a tiny call-per-line DSL over the four skill primitives.

A program is a sequence of statements, optionally ``;``-terminated, with
``#`` line comments::

    grasp("pink cup", "side")
    lift("pink cup")
    reorient("pink cup", "horizontal")   # synonym of "to_horizontal"
    reorient("pink cup", "vertical")     # synonym of "to_upright"
    place("pink cup")

``grasp`` takes an approach ("top-down", "side", "diagonal"); ``reorient``
takes a direction (canonically "to_horizontal"/"to_upright", with
"horizontal"/"vertical"/"upright" accepted); ``lift`` and ``place`` take only
the object. Rendering a parsed plan back to text and re-parsing it is the
identity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import language
from .geometry import GraspApproachClass
from .trajectory import SkillKind

_REORIENT_SYNONYMS = {
    "horizontal": language.TO_HORIZONTAL,
    "to_horizontal": language.TO_HORIZONTAL,
    "vertical": language.TO_UPRIGHT,
    "upright": language.TO_UPRIGHT,
    "to_upright": language.TO_UPRIGHT,
}

_ARITY = {
    SkillKind.GRASP: 2,
    SkillKind.REORIENT: 2,
    SkillKind.LIFT: 1,
    SkillKind.PLACE: 1,
}


class PlanSyntaxError(ValueError):
    """Parse/validation failure with a position and a machine-readable code."""

    def __init__(self, code: str, message: str, line: int = 0, column: int = 0):
        super().__init__(f"{message} (line {line}, column {column})" if line else message)
        self.code = code
        self.line = line
        self.column = column


@dataclass(frozen=True)
class SkillCall:
    """One skill invocation: what to do, to what, and how."""

    name: SkillKind
    object: str
    modifier: str | None = None

    def __post_init__(self):
        arity = _ARITY[self.name]
        if arity == 1 and self.modifier is not None:
            raise ValueError(f"{self.name.value} takes no modifier")
        if self.name is SkillKind.GRASP and self.modifier not in language.GRASP_MODIFIERS:
            raise ValueError(f"invalid grasp approach: {self.modifier!r}")
        if self.name is SkillKind.REORIENT and self.modifier not in language.REORIENT_DIRECTIONS:
            raise ValueError(f"invalid reorient direction: {self.modifier!r}")

    def render(self) -> str:
        if self.modifier is None:
            return f'{self.name.value}("{self.object}")'
        return f'{self.name.value}("{self.object}", "{self.modifier}")'


@dataclass(frozen=True)
class Plan:
    calls: tuple[SkillCall, ...]
    source_text: str

    def __len__(self) -> int:
        return len(self.calls)


# Token kinds: identifiers, double-quoted strings (no escapes; object names
# never contain quotes), punctuation, comments, whitespace.
_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<comment>\#[^\n]*)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<string>"[^"\n]*")
      | (?P<punct>[(),;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise PlanSyntaxError("syntax", f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok_text = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, tok_text, line, col))
        newlines = tok_text.count("\n")
        if newlines:
            line += newlines
            col = len(tok_text) - tok_text.rfind("\n")
        else:
            col += len(tok_text)
        pos = m.end()
    return tokens


def parse_plan(text: str) -> Plan:
    """Parse DSL text into a :class:`Plan`, normalizing reorient synonyms.

    Raises :class:`PlanSyntaxError` with codes: ``empty_program``, ``syntax``,
    ``unknown_function``, ``arity``, ``invalid_modifier``.
    """
    tokens = _tokenize(text)
    if not tokens:
        raise PlanSyntaxError("empty_program", "empty program")

    calls: list[SkillCall] = []
    i = 0

    def expect(kind: str, what: str, text: str | None = None) -> _Token:
        nonlocal i
        if i >= len(tokens):
            last = tokens[-1]
            raise PlanSyntaxError("syntax", f"expected {what} at end of program", last.line, last.column)
        tok = tokens[i]
        if tok.kind != kind or (text is not None and tok.text != text):
            raise PlanSyntaxError("syntax", f"expected {what}, found {tok.text!r}", tok.line, tok.column)
        i += 1
        return tok

    while i < len(tokens):
        name_tok = expect("ident", "a skill name")
        try:
            kind = SkillKind(name_tok.text)
        except ValueError:
            raise PlanSyntaxError(
                "unknown_function", f"unknown function {name_tok.text!r}",
                name_tok.line, name_tok.column,
            ) from None
        expect("punct", "'('", "(")
        obj_tok = expect("string", "a quoted object name")
        obj = obj_tok.text[1:-1]

        modifier = None
        if i < len(tokens) and tokens[i].kind == "punct" and tokens[i].text == ",":
            i += 1
            mod_tok = expect("string", "a quoted modifier")
            modifier = mod_tok.text[1:-1]
        expect("punct", "')'", ")")
        if i < len(tokens) and tokens[i].kind == "punct" and tokens[i].text == ";":
            i += 1

        arity = _ARITY[kind]
        if (modifier is None) != (arity == 1):
            raise PlanSyntaxError(
                "arity",
                f"{kind.value} takes {arity} argument{'s' if arity > 1 else ''}",
                name_tok.line, name_tok.column,
            )
        if kind is SkillKind.REORIENT:
            if modifier not in _REORIENT_SYNONYMS:
                raise PlanSyntaxError(
                    "invalid_modifier",
                    f"invalid reorient direction {modifier!r}",
                    mod_tok.line, mod_tok.column,
                )
            modifier = _REORIENT_SYNONYMS[modifier]
        if kind is SkillKind.GRASP and modifier not in language.GRASP_MODIFIERS:
            raise PlanSyntaxError(
                "invalid_modifier",
                f"invalid grasp approach {modifier!r}",
                mod_tok.line, mod_tok.column,
            )
        calls.append(SkillCall(kind, obj, modifier))

    return Plan(calls=tuple(calls), source_text=text)


def render_plan(plan: Plan) -> str:
    """Canonical DSL text for a plan; parse_plan(render_plan(p)).calls == p.calls."""
    return "\n".join(call.render() for call in plan.calls)


def render_language(call: SkillCall) -> str:
    """The natural-language instruction a skill call maps to.

    These strings are byte-identical to the relabeled training instructions;
    they are the only language the low-level policy layer ever sees.
    """
    if call.name is SkillKind.GRASP:
        return language.render_grasp(call.object, GraspApproachClass.from_label(call.modifier))
    if call.name is SkillKind.REORIENT:
        return language.render_reorient(call.object, call.modifier)
    if call.name is SkillKind.LIFT:
        return language.render_lift(call.object)
    return language.render_place(call.object)
