/**
 * Gateway client: typed wrappers over the session HTTP API plus the
 * WebSocket state stream. The console never invents instruction strings;
 * whatever language appears in the UI arrived in one of these payloads.
 */

export interface GripperState {
  position: [number, number, number];
  wrist_quat: [number, number, number, number];
  aperture: number;
}

export interface GraspConstraint {
  allowed: string[];
  reason: string;
  topples: string | null;
}

export interface ObjectSnapshot {
  position: [number, number, number];
  orientation: "upright" | "horizontal";
  held: boolean;
  toppleable: boolean;
  grasp_constraint: GraspConstraint | null;
}

export interface SceneSnapshot {
  gripper: GripperState;
  objects: Record<string, ObjectSnapshot>;
  table_height: number;
}

export interface OutcomeSummary {
  skill: { name: string; object: string; modifier: string | null };
  success: boolean;
  reason: string;
  instruction: string;
}

export interface StreamEvent {
  seq: number;
  step: number;
  scene: SceneSnapshot;
  outcome: OutcomeSummary;
}

export interface SkillResponse {
  outcome: { success: boolean; reason: string };
  instruction: string;
  state: SceneSnapshot;
}

export interface PlanIssue {
  code: string;
  message: string;
  call_index?: number;
  line?: number;
  column?: number;
}

export interface ValidationResponse {
  errors: PlanIssue[];
  warnings: PlanIssue[];
}

export interface PlanLogEntry {
  call_index: number;
  call: { name: string; object: string; modifier: string | null };
  instruction: string;
  success: boolean;
  reason: string;
}

export interface ExecuteResponse {
  log: PlanLogEntry[];
  state: SceneSnapshot;
}

export interface GatewayErrorPayload {
  code: string;
  message: string;
  detail: string;
}

export class GatewayError extends Error {
  constructor(
    readonly status: number,
    readonly payload: GatewayErrorPayload,
  ) {
    super(payload.message);
  }
}

/** Minimal WebSocket surface so tests can substitute a scripted stub. */
export interface StreamSocket {
  onmessage: ((event: { data: string }) => void) | null;
  onerror: ((event: unknown) => void) | null;
  onclose: ((event: unknown) => void) | null;
  close(): void;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;
export type SocketFactory = (url: string) => StreamSocket;

export interface StreamHandle {
  close(): void;
}

export class GatewayClient {
  private fetchImpl: FetchLike;
  private socketFactory: SocketFactory;

  constructor(
    readonly baseUrl: string,
    options: { fetchImpl?: FetchLike; socketFactory?: SocketFactory } = {},
  ) {
    this.fetchImpl = options.fetchImpl ?? ((url, init) => fetch(url, init));
    this.socketFactory =
      options.socketFactory ??
      ((url) => new WebSocket(url) as unknown as StreamSocket);
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new GatewayError(response.status, payload as GatewayErrorPayload);
    }
    return payload as T;
  }

  createSession(scenario: string, seed: number) {
    return this.request<{ session_id: string; state: SceneSnapshot }>(
      "POST", "/sessions", { scenario, seed },
    );
  }

  async getState(sessionId: string): Promise<SceneSnapshot> {
    const payload = await this.request<{ state: SceneSnapshot }>(
      "GET", `/sessions/${sessionId}/state`,
    );
    return payload.state;
  }

  postSkill(sessionId: string, name: string, object: string, modifier: string | null) {
    return this.request<SkillResponse>("POST", `/sessions/${sessionId}/skill`, {
      name, object, modifier,
    });
  }

  validatePlan(sessionId: string, program: string) {
    return this.request<ValidationResponse>("POST", `/sessions/${sessionId}/plan`, {
      program, mode: "validate_only",
    });
  }

  executePlan(sessionId: string, program: string) {
    return this.request<ExecuteResponse>("POST", `/sessions/${sessionId}/plan`, {
      program, mode: "execute",
    });
  }

  markOutcome(sessionId: string, task: string, succeeded: boolean) {
    return this.request<{ recorded: boolean }>(
      "POST", `/sessions/${sessionId}/outcome`, { task, succeeded },
    );
  }

  getHistory(sessionId: string) {
    return this.request<{ entries: unknown[] }>("GET", `/sessions/${sessionId}/history`);
  }

  /** Subscribe to the per-step event stream. Events arrive ordered and gap-free. */
  openStream(
    sessionId: string,
    handlers: {
      onEvent: (event: StreamEvent) => void;
      onError?: (message: string) => void;
      onClose?: () => void;
    },
  ): StreamHandle {
    const wsBase = this.baseUrl.replace(/^http/, "ws");
    const socket = this.socketFactory(`${wsBase}/sessions/${sessionId}/stream`);
    socket.onmessage = (message) => {
      try {
        handlers.onEvent(JSON.parse(message.data) as StreamEvent);
      } catch {
        handlers.onError?.("unparseable stream frame");
      }
    };
    socket.onerror = () => handlers.onError?.("stream connection error");
    socket.onclose = () => handlers.onClose?.();
    return { close: () => socket.close() };
  }
}
