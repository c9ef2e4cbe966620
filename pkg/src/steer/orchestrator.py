"""Plan validation and execution, pluggable planners, and the example memory.

Planners produce DSL programs from a request carrying the system prompt, a
textual scene summary, the task, and previously successful programs for the
same task (in-context examples). Programs are parsed and validated before
anything touches the simulator; a planner that returns a broken program is
re-queried with the error text a bounded number of times. Execution is
open-loop: calls run in order and stop at the first failure.
"""

from __future__ import annotations

import json
import threading
import time
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable, Protocol

from .dsl import Plan, PlanSyntaxError, SkillCall, parse_plan, render_language
from .sim import SceneState, SimSession
from .trajectory import SkillKind

DEFAULT_PLANNER_RETRIES = 2


class PlannerFailure(RuntimeError):
    """The planner could not produce a valid program (after retries)."""


@dataclass(frozen=True)
class PlanIssue:
    call_index: int
    code: str
    message: str

    def as_dict(self) -> dict:
        return {"call_index": self.call_index, "code": self.code, "message": self.message}


@dataclass
class ValidationReport:
    errors: list[PlanIssue] = field(default_factory=list)
    warnings: list[PlanIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def as_dict(self) -> dict:
        return {
            "errors": [e.as_dict() for e in self.errors],
            "warnings": [w.as_dict() for w in self.warnings],
        }


class PlanValidationError(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__("; ".join(f"call {e.call_index}: {e.message}" for e in report.errors))
        self.report = report


def validate_plan(plan: Plan, scene: SceneState | None = None) -> ValidationReport:
    """Lint a plan's skill ordering, plus name checks against a scene if given.

    Errors: acting on an object before grasping it, grasping while already
    holding, grasping a held object again. Warnings: object names that match
    nothing in the scene. A plan may legitimately continue from a scene that
    already holds an object, so the held-state starts from the scene.
    """
    report = ValidationReport()
    held: str | None = None
    if scene is not None and scene.held_object is not None:
        held = scene.held_object.name
    for idx, call in enumerate(plan.calls):
        if call.name is SkillKind.GRASP:
            if held is not None:
                report.errors.append(
                    PlanIssue(idx, "grasp_while_holding",
                              f"grasp of {call.object!r} while still holding {held!r}")
                )
            held = call.object
        else:
            if held is None or not _names_match(held, call.object):
                verb = call.name.value
                report.errors.append(
                    PlanIssue(idx, "order_violation",
                              f"{verb} of {call.object!r} before grasping it")
                )
            elif call.name is SkillKind.PLACE:
                held = None
        if scene is not None and not _object_known(scene, call.object):
            report.warnings.append(
                PlanIssue(idx, "unknown_object", f"no object matching {call.object!r} in the scene")
            )
    return report


def _names_match(a: str, b: str) -> bool:
    a, b = a.lower(), b.lower()
    return a == b or a in b or b in a


def _object_known(scene: SceneState, name: str) -> bool:
    if name in scene.objects:
        return True
    matches = [
        key for key in scene.objects
        if name.lower() in key.lower() or key.lower() in name.lower()
    ]
    return len(matches) == 1


@dataclass
class ExecutionEntry:
    call_index: int
    call: SkillCall
    instruction: str
    success: bool
    reason: str
    scene: dict  # snapshot after the call

    def as_dict(self) -> dict:
        return {
            "call_index": self.call_index,
            "call": {"name": self.call.name.value, "object": self.call.object,
                     "modifier": self.call.modifier},
            "instruction": self.instruction,
            "success": self.success,
            "reason": self.reason,
            "scene": self.scene,
        }


def execute_plan(plan: Plan, session: SimSession, validate: bool = True) -> list[ExecutionEntry]:
    """Run a plan open-loop against a simulator session, halting on failure.

    Each entry records the rendered instruction (the language the call maps
    to), the outcome, and a scene snapshot. Session-level precondition
    errors become the halting entry rather than propagating.
    """
    if validate:
        report = validate_plan(plan, session.scene)
        if not report.ok:
            raise PlanValidationError(report)
    log: list[ExecutionEntry] = []
    for idx, call in enumerate(plan.calls):
        instruction = render_language(call)
        try:
            outcome = session.exec_skill(call)
            success, reason = outcome.success, outcome.reason
        except Exception as e:  # precondition violations halt the plan
            success, reason = False, str(e)
        log.append(
            ExecutionEntry(idx, call, instruction, success, reason, session.scene.snapshot())
        )
        if not success:
            break
    return log


# -- planner interface -----------------------------------------------------


@dataclass
class PlannerRequest:
    system_prompt: str
    scene_summary: str
    task: str
    examples: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "system_prompt": self.system_prompt,
            "scene_summary": self.scene_summary,
            "task": self.task,
            "examples": list(self.examples),
        }


class Planner(Protocol):
    def propose(self, request: PlannerRequest) -> str:
        """Return DSL program text for the request."""


def default_system_prompt() -> str:
    return resources.files("steer.data").joinpath("system_prompt.txt").read_text()


def scene_summary(scene: SceneState) -> str:
    """Flatten a scene into the planner-facing text description."""
    lines = []
    for name, obj in sorted(scene.objects.items()):
        state = obj.orientation_class
        if obj.held:
            state += ", held by the gripper"
        else:
            state += ", on the table"
        hint = ""
        if obj.grasp_rule is not None:
            approaches = " or ".join(obj.grasp_rule.allowed)
            hint = f" (grasp only from the {approaches}; otherwise: {obj.grasp_rule.reason})"
        lines.append(f"- {name}: {state}{hint}")
    return "Objects in the scene:\n" + "\n".join(lines)


CANONICAL_POUR_PROGRAM = """\
grasp("pink cup", "side")
lift("pink cup")
reorient("pink cup", "horizontal")
reorient("pink cup", "upright")
place("pink cup")
"""

CANONICAL_UNSTACK_PROGRAM = """\
grasp("top cup", "side")
lift("top cup")
reorient("top cup", "upright")
place("top cup")
"""


class ScriptedPlanner:
    """Fixed task-to-program table; the deterministic stand-in for a real planner."""

    DEFAULT_TABLE = {
        "pour from the pink cup": CANONICAL_POUR_PROGRAM,
        "unstack the top cup and set it upright": CANONICAL_UNSTACK_PROGRAM,
    }

    def __init__(self, table: dict[str, str] | None = None):
        self.table = dict(table) if table is not None else dict(self.DEFAULT_TABLE)

    def propose(self, request: PlannerRequest) -> str:
        try:
            return self.table[request.task]
        except KeyError:
            raise PlannerFailure(f"no scripted program for task {request.task!r}") from None


class RemotePlanner:
    """HTTP client for an external planning endpoint.

    POSTs the request as JSON and expects ``{"program": "..."}`` back. The
    endpoint URL and timeout default to the ``STEER_PLANNER_URL`` and
    ``STEER_PLANNER_TIMEOUT_S`` environment variables.
    """

    def __init__(self, url: str | None = None, timeout_s: float | None = None):
        import os

        self.url = url or os.environ.get("STEER_PLANNER_URL")
        if not self.url:
            raise ValueError("remote planner needs a URL (flag or STEER_PLANNER_URL)")
        if timeout_s is None:
            timeout_s = float(os.environ.get("STEER_PLANNER_TIMEOUT_S", "30"))
        self.timeout_s = timeout_s

    def propose(self, request: PlannerRequest) -> str:
        body = json.dumps(request.as_dict()).encode()
        req = urllib.request.Request(
            self.url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout_s) as resp:
                payload = json.loads(resp.read().decode())
        except (urllib.error.URLError, json.JSONDecodeError, UnicodeDecodeError) as e:
            raise PlannerFailure(f"planner endpoint failed: {e}") from e
        if not isinstance(payload, dict) or not isinstance(payload.get("program"), str):
            raise PlannerFailure("planner response missing 'program'")
        return payload["program"]


class InteractivePlanner:
    """Defers to a human: the prompt callback supplies the program text."""

    def __init__(self, ask: Callable[[PlannerRequest], str] | None = None):
        self.ask = ask if ask is not None else self._stdin_ask

    @staticmethod
    def _stdin_ask(request: PlannerRequest) -> str:
        print(request.scene_summary)
        print(f"Task: {request.task}")
        print("Enter a program, end with an empty line:")
        lines = []
        while True:
            line = input()
            if not line:
                break
            lines.append(line)
        return "\n".join(lines)

    def propose(self, request: PlannerRequest) -> str:
        return self.ask(request)


def propose_plan(
    planner: Planner,
    request: PlannerRequest,
    scene: SceneState | None = None,
    retries: int = DEFAULT_PLANNER_RETRIES,
) -> Plan:
    """Query a planner until it yields a program that parses and validates.

    On an invalid program the planner is re-queried with the error appended
    to the task, at most ``retries`` more times; then :class:`PlannerFailure`.
    """
    attempt_request = request
    last_error = "planner returned nothing"
    for _ in range(retries + 1):
        try:
            text = planner.propose(attempt_request)
        except PlannerFailure as e:
            last_error = str(e)
            continue
        try:
            plan = parse_plan(text)
        except PlanSyntaxError as e:
            last_error = str(e)
        else:
            report = validate_plan(plan, scene)
            if report.ok:
                return plan
            last_error = "; ".join(e.message for e in report.errors)
        attempt_request = PlannerRequest(
            system_prompt=request.system_prompt,
            scene_summary=request.scene_summary,
            task=(
                f"{request.task}\n\nThe previous program was rejected: {last_error}. "
                "Respond with a corrected program."
            ),
            examples=request.examples,
        )
    raise PlannerFailure(f"no valid program after {retries} retries: {last_error}")


# -- self-improvement memory -------------------------------------------------


@dataclass(frozen=True)
class PlannerMemoryEntry:
    task: str
    program: str
    succeeded: bool
    timestamp: float


class PlannerMemory:
    """Append-only store of attempted programs, keyed by exact task string.

    Only programs marked successful are ever handed back as in-context
    examples. Optionally persists as JSON lines so a restarted service keeps
    its examples.
    """

    def __init__(self, path: str | None = None):
        self._entries: list[PlannerMemoryEntry] = []
        self._lock = threading.Lock()
        self._path = path
        if path is not None:
            try:
                with open(path) as f:
                    for line in f:
                        if line.strip():
                            rec = json.loads(line)
                            self._entries.append(PlannerMemoryEntry(**rec))
            except FileNotFoundError:
                pass

    def record(self, task: str, program: str, succeeded: bool) -> None:
        entry = PlannerMemoryEntry(task, program, succeeded, time.time())
        with self._lock:
            self._entries.append(entry)
            if self._path is not None:
                with open(self._path, "a") as f:
                    f.write(json.dumps(entry.__dict__) + "\n")

    def retrieve(self, task: str, k: int) -> list[str]:
        """Up to k most recent successful programs for the task, newest first."""
        with self._lock:
            matches = [e.program for e in self._entries if e.succeeded and e.task == task]
        return list(reversed(matches))[:k]


def build_planner_request(
    task: str,
    scene: SceneState,
    memory: PlannerMemory | None = None,
    k_examples: int = 3,
    system_prompt: str | None = None,
) -> PlannerRequest:
    return PlannerRequest(
        system_prompt=system_prompt if system_prompt is not None else default_system_prompt(),
        scene_summary=scene_summary(scene),
        task=task,
        examples=memory.retrieve(task, k_examples) if memory is not None else [],
    )
