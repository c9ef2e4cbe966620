"""HTTP session service over the simulator and orchestrator.

Endpoints (JSON bodies, error payloads ``{"code", "message", "detail"}``):

    POST /sessions                       {"scenario", "seed"} -> {"session_id", "state"}
    GET  /sessions/{id}/state
    POST /sessions/{id}/skill            {"name", "object", "modifier"}
    POST /sessions/{id}/plan             {"program", "mode": "validate_only"|"execute"}
    GET  /sessions/{id}/history
    POST /sessions/{id}/outcome          {"task", "succeeded"}
    GET  /sessions/{id}/stream           WebSocket upgrade

Commands against one session are strictly serialized; every trajectory step
a skill appends is broadcast to that session's stream subscribers as an
ordered, gap-free event sequence. Replaying a session's history on a fresh
session with the same scenario and seed reproduces the same final scene.
"""

from __future__ import annotations

import json
import os
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from . import ws
from .dsl import PlanSyntaxError, SkillCall, parse_plan, render_language
from .orchestrator import PlannerMemory, execute_plan, validate_plan
from .sim import SimError, SimSession
from .trajectory import SkillKind


class GatewayError(Exception):
    def __init__(self, status: int, code: str, message: str, detail: str = ""):
        super().__init__(message)
        self.status = status
        self.code = code
        self.detail = detail

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self), "detail": self.detail}


@dataclass
class Session:
    session_id: str
    sim: SimSession
    scenario: str
    seed: int
    created_at: float = field(default_factory=time.time)
    history: list[dict] = field(default_factory=list)
    last_program: str | None = None
    last_task: str | None = None
    seq: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)
    subscribers: list[queue.SimpleQueue] = field(default_factory=list)

    def subscribe(self) -> queue.SimpleQueue:
        q: queue.SimpleQueue = queue.SimpleQueue()
        with self.lock:
            self.subscribers.append(q)
        return q

    def unsubscribe(self, q: queue.SimpleQueue) -> None:
        with self.lock:
            if q in self.subscribers:
                self.subscribers.remove(q)

    def _broadcast_locked(self, event: dict) -> None:
        event["seq"] = self.seq
        self.seq += 1
        for q in self.subscribers:
            q.put(event)

    def emit_skill_events(self, call: SkillCall, outcome, instruction: str) -> None:
        """One event per appended trajectory step, holding the session lock."""
        base_objects = {name: obj.as_dict() for name, obj in self.sim.scene.objects.items()}
        summary = {
            "skill": {"name": call.name.value, "object": call.object, "modifier": call.modifier},
            "success": outcome.success,
            "reason": outcome.reason,
            "instruction": instruction,
        }
        for i in range(outcome.n_steps):
            objects = base_objects
            if outcome.held_object is not None and i >= outcome.held_from:
                objects = dict(base_objects)
                tracked = dict(objects[outcome.held_object])
                tracked["position"] = [float(x) for x in outcome.positions[i]]
                objects[outcome.held_object] = tracked
            scene = {
                "gripper": {
                    "position": [float(x) for x in outcome.positions[i]],
                    "wrist_quat": [float(x) for x in outcome.quaternions[i]],
                    "aperture": float(outcome.apertures[i]),
                },
                "objects": objects,
                "table_height": float(self.sim.scene.table_height),
            }
            self._broadcast_locked(
                {"step": outcome.start_index + i, "scene": scene, "outcome": summary}
            )


class Gateway:
    """In-memory session registry shared by the HTTP handler threads."""

    def __init__(self, persist_dir: str | None = None):
        self.sessions: dict[str, Session] = {}
        self.registry_lock = threading.Lock()
        self.memory = PlannerMemory(
            os.path.join(persist_dir, "planner_memory.jsonl") if persist_dir else None
        )
        self.persist_dir = persist_dir
        if persist_dir:
            os.makedirs(persist_dir, exist_ok=True)

    # -- session operations -------------------------------------------------

    def create_session(self, scenario: str, seed: int) -> Session:
        try:
            sim = SimSession(scenario=scenario, seed=seed)
        except SimError as e:
            raise GatewayError(400, "unknown_scenario", str(e)) from e
        session = Session(
            session_id=uuid.uuid4().hex[:12], sim=sim, scenario=scenario, seed=seed
        )
        with self.registry_lock:
            self.sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> Session:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise GatewayError(404, "not_found", f"no session {session_id!r}") from None

    def post_skill(self, session: Session, body: dict) -> dict:
        try:
            call = SkillCall(
                SkillKind(body["name"]), body["object"], body.get("modifier")
            )
        except (KeyError, ValueError) as e:
            raise GatewayError(400, "invalid_skill", f"bad skill call: {e}") from e
        instruction = render_language(call)
        with session.lock:
            try:
                outcome = session.sim.exec_skill(call)
            except SimError as e:
                # Precondition violation: rejected, no state change, no events.
                raise GatewayError(409, "rejected", str(e)) from e
            entry = {
                "type": "skill",
                "call": {"name": call.name.value, "object": call.object, "modifier": call.modifier},
                "instruction": instruction,
                "success": outcome.success,
                "reason": outcome.reason,
            }
            session.history.append(entry)
            self._persist(session, entry)
            session.emit_skill_events(call, outcome, instruction)
            state = session.sim.scene.snapshot()
        return {
            "outcome": {"success": outcome.success, "reason": outcome.reason},
            "instruction": instruction,
            "state": state,
        }

    def post_plan(self, session: Session, body: dict) -> dict:
        program = body.get("program", "")
        mode = body.get("mode", "execute")
        if mode not in ("validate_only", "execute"):
            raise GatewayError(400, "bad_mode", f"unknown mode {mode!r}")
        try:
            plan = parse_plan(program)
        except PlanSyntaxError as e:
            payload = {
                "errors": [
                    {"code": e.code, "message": str(e), "line": e.line, "column": e.column}
                ],
                "warnings": [],
            }
            if mode == "validate_only":
                return payload
            raise GatewayError(400, "parse_error", str(e), detail=e.code) from e

        report = validate_plan(plan, session.sim.scene)
        if mode == "validate_only":
            return report.as_dict()
        if not report.ok:
            raise GatewayError(
                400, "validation_error",
                "; ".join(e.message for e in report.errors),
            )
        with session.lock:
            log = []
            for idx, call in enumerate(plan.calls):
                instruction = render_language(call)
                try:
                    outcome = session.sim.exec_skill(call)
                    success, reason = outcome.success, outcome.reason
                except SimError as e:
                    success, reason = False, str(e)
                    outcome = None
                entry = {
                    "type": "plan_call",
                    "call_index": idx,
                    "call": {"name": call.name.value, "object": call.object, "modifier": call.modifier},
                    "instruction": instruction,
                    "success": success,
                    "reason": reason,
                }
                session.history.append(entry)
                self._persist(session, entry)
                if outcome is not None:
                    session.emit_skill_events(call, outcome, instruction)
                log.append(entry)
                if not success:
                    break
            session.last_program = program
            state = session.sim.scene.snapshot()
        return {"log": log, "state": state}

    def mark_outcome(self, session: Session, body: dict) -> dict:
        task = body.get("task")
        succeeded = body.get("succeeded")
        if not isinstance(task, str) or not isinstance(succeeded, bool):
            raise GatewayError(400, "bad_request", "need task: str and succeeded: bool")
        with session.lock:
            if session.last_program is None:
                raise GatewayError(409, "no_plan", "session has no executed plan to mark")
            self.memory.record(task, session.last_program, succeeded)
            session.last_task = task
        return {"recorded": True}

    def _persist(self, session: Session, entry: dict) -> None:
        if not self.persist_dir:
            return
        path = os.path.join(self.persist_dir, f"{session.session_id}.jsonl")
        with open(path, "a") as f:
            f.write(json.dumps(entry) + "\n")


def make_handler(gateway: Gateway):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        # -- plumbing ------------------------------------------------------

        def _json_body(self) -> dict:
            length = int(self.headers.get("Content-Length", 0))
            raw = self.rfile.read(length) if length else b"{}"
            try:
                body = json.loads(raw.decode() or "{}")
            except (json.JSONDecodeError, UnicodeDecodeError) as e:
                raise GatewayError(400, "bad_json", f"request body is not JSON: {e}") from e
            if not isinstance(body, dict):
                raise GatewayError(400, "bad_json", "request body must be a JSON object")
            return body

        def _send(self, status: int, payload: dict) -> None:
            blob = json.dumps(payload).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(blob)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(blob)

        def _route(self) -> tuple[str, ...]:
            return tuple(p for p in self.path.split("?")[0].split("/") if p)

        # -- methods --------------------------------------------------------

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_POST(self):
            try:
                route = self._route()
                if route == ("sessions",):
                    body = self._json_body()
                    try:
                        seed = int(body.get("seed", 0))
                    except (TypeError, ValueError):
                        raise GatewayError(400, "bad_request", "seed must be an integer") from None
                    session = gateway.create_session(
                        body.get("scenario", "single_cup"), seed
                    )
                    self._send(201, {
                        "session_id": session.session_id,
                        "state": session.sim.scene.snapshot(),
                    })
                elif len(route) == 3 and route[0] == "sessions" and route[2] == "skill":
                    session = gateway.get_session(route[1])
                    self._send(200, gateway.post_skill(session, self._json_body()))
                elif len(route) == 3 and route[0] == "sessions" and route[2] == "plan":
                    session = gateway.get_session(route[1])
                    self._send(200, gateway.post_plan(session, self._json_body()))
                elif len(route) == 3 and route[0] == "sessions" and route[2] == "outcome":
                    session = gateway.get_session(route[1])
                    self._send(200, gateway.mark_outcome(session, self._json_body()))
                else:
                    raise GatewayError(404, "not_found", f"no route {self.path!r}")
            except GatewayError as e:
                self._send(e.status, e.payload())

        def do_GET(self):
            try:
                route = self._route()
                if len(route) == 3 and route[0] == "sessions" and route[2] == "state":
                    session = gateway.get_session(route[1])
                    with session.lock:
                        self._send(200, {"state": session.sim.scene.snapshot()})
                elif len(route) == 3 and route[0] == "sessions" and route[2] == "history":
                    session = gateway.get_session(route[1])
                    with session.lock:
                        self._send(200, {"entries": list(session.history)})
                elif len(route) == 3 and route[0] == "sessions" and route[2] == "stream":
                    session = gateway.get_session(route[1])
                    self._stream(session)
                else:
                    raise GatewayError(404, "not_found", f"no route {self.path!r}")
            except GatewayError as e:
                self._send(e.status, e.payload())

        # -- streaming --------------------------------------------------------

        def _stream(self, session: Session) -> None:
            key = self.headers.get("Sec-WebSocket-Key")
            if self.headers.get("Upgrade", "").lower() != "websocket" or not key:
                raise GatewayError(400, "upgrade_required", "stream endpoint speaks WebSocket")
            self.send_response(101, "Switching Protocols")
            self.send_header("Upgrade", "websocket")
            self.send_header("Connection", "Upgrade")
            self.send_header("Sec-WebSocket-Accept", ws.accept_key(key))
            self.end_headers()
            self.close_connection = True

            sock = self.connection
            q = session.subscribe()
            closed = threading.Event()

            def reader():
                try:
                    while not closed.is_set():
                        opcode, payload = ws.read_frame(sock)
                        if opcode == ws.OP_CLOSE:
                            break
                        if opcode == ws.OP_PING:
                            sock.sendall(ws.encode_frame(payload, ws.OP_PONG))
                except (ConnectionError, OSError):
                    pass
                closed.set()

            threading.Thread(target=reader, daemon=True).start()
            try:
                while not closed.is_set():
                    try:
                        event = q.get(timeout=0.25)
                    except queue.Empty:
                        continue
                    sock.sendall(ws.encode_frame(json.dumps(event).encode(), ws.OP_TEXT))
            except (ConnectionError, OSError, BrokenPipeError):
                pass
            finally:
                closed.set()
                session.unsubscribe(q)

    return Handler


def serve(port: int, persist_dir: str | None = None) -> ThreadingHTTPServer:
    """Build the HTTP server; callers decide between serve_forever and a thread."""
    gateway = Gateway(persist_dir=persist_dir)
    server = ThreadingHTTPServer(("127.0.0.1", port), make_handler(gateway))
    server.gateway = gateway  # handy for tests and embedding
    return server
