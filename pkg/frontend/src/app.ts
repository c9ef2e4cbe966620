/**
 * DOM wiring for the operator console. All state lives in ConsoleModel;
 * this file renders it and forwards user intent to the gateway client.
 */

import { GatewayClient, GatewayError, StreamHandle } from "./api.js";
import { ConsoleModel, SKILL_NAMES, allowedModifiers, debounce } from "./model.js";
import { renderScene } from "./scene.js";

export interface ConsoleElements {
  banner: HTMLDivElement;
  scenario: HTMLSelectElement;
  seed: HTMLInputElement;
  connectButton: HTMLButtonElement;
  sessionLabel: HTMLSpanElement;
  scene: HTMLDivElement;
  object: HTMLSelectElement;
  skill: HTMLSelectElement;
  modifier: HTMLSelectElement;
  send: HTMLButtonElement;
  skillResult: HTMLDivElement;
  program: HTMLTextAreaElement;
  diagnostics: HTMLDivElement;
  validateButton: HTMLButtonElement;
  executeButton: HTMLButtonElement;
  timeline: HTMLOListElement;
  task: HTMLInputElement;
  markSuccess: HTMLButtonElement;
  markFailure: HTMLButtonElement;
}

export interface ConsoleHandles {
  model: ConsoleModel;
  connect(scenario: string, seed: number): Promise<void>;
  sendSkill(): Promise<void>;
  submitPlan(mode: "validate_only" | "execute"): Promise<void>;
  markOutcome(succeeded: boolean): Promise<void>;
  refresh(): void;
  elements: ConsoleElements;
}

const LAYOUT = `
  <div class="banner" data-role="banner" hidden></div>
  <section class="connect">
    <label>scenario
      <select data-role="scenario">
        <option>single_cup</option><option>potted_plant</option>
        <option>kettle</option><option>clutter</option><option>stacked</option>
      </select>
    </label>
    <label>seed <input data-role="seed" type="number" value="0" /></label>
    <button data-role="connect">connect</button>
    <span data-role="session-label"></span>
  </section>
  <section class="scene" data-role="scene"></section>
  <section class="palette">
    <label>object <select data-role="object"></select></label>
    <label>skill <select data-role="skill"></select></label>
    <label>how <select data-role="modifier"></select></label>
    <button data-role="send" disabled>send skill</button>
    <div data-role="skill-result"></div>
  </section>
  <section class="editor">
    <textarea data-role="program" rows="7" spellcheck="false"
      placeholder='grasp("pink cup", "side") ...'></textarea>
    <div data-role="diagnostics"></div>
    <button data-role="validate">validate</button>
    <button data-role="execute">execute</button>
  </section>
  <section class="timeline"><ol data-role="timeline"></ol></section>
  <section class="outcome">
    <label>task <input data-role="task" placeholder="pour from the pink cup" /></label>
    <button data-role="mark-success">mark success</button>
    <button data-role="mark-failure">mark failure</button>
  </section>
`;

export function createConsole(
  root: HTMLElement,
  client: GatewayClient,
  options: { validateDelayMs?: number } = {},
): ConsoleHandles {
  root.innerHTML = LAYOUT;
  const el = <T extends HTMLElement>(role: string): T => {
    const found = root.querySelector<T>(`[data-role="${role}"]`);
    if (!found) throw new Error(`missing element: ${role}`);
    return found;
  };

  const elements: ConsoleElements = {
    banner: el<HTMLDivElement>("banner"),
    scenario: el<HTMLSelectElement>("scenario"),
    seed: el<HTMLInputElement>("seed"),
    connectButton: el<HTMLButtonElement>("connect"),
    sessionLabel: el<HTMLSpanElement>("session-label"),
    scene: el<HTMLDivElement>("scene"),
    object: el<HTMLSelectElement>("object"),
    skill: el<HTMLSelectElement>("skill"),
    modifier: el<HTMLSelectElement>("modifier"),
    send: el<HTMLButtonElement>("send"),
    skillResult: el<HTMLDivElement>("skill-result"),
    program: el<HTMLTextAreaElement>("program"),
    diagnostics: el<HTMLDivElement>("diagnostics"),
    validateButton: el<HTMLButtonElement>("validate"),
    executeButton: el<HTMLButtonElement>("execute"),
    timeline: el<HTMLOListElement>("timeline"),
    task: el<HTMLInputElement>("task"),
    markSuccess: el<HTMLButtonElement>("mark-success"),
    markFailure: el<HTMLButtonElement>("mark-failure"),
  };

  const model = new ConsoleModel();
  let sessionId: string | null = null;
  let stream: StreamHandle | null = null;

  for (const name of SKILL_NAMES) {
    const option = document.createElement("option");
    option.value = name;
    option.textContent = name;
    elements.skill.appendChild(option);
  }

  function refreshModifierOptions(): void {
    const skill = elements.skill.value;
    const modifiers = allowedModifiers(skill);
    elements.modifier.innerHTML = "";
    if (modifiers.length === 0) {
      elements.modifier.disabled = true;
      return;
    }
    elements.modifier.disabled = false;
    for (const m of modifiers) {
      const option = document.createElement("option");
      option.value = m;
      option.textContent = m;
      elements.modifier.appendChild(option);
    }
  }
  elements.skill.addEventListener("change", refreshModifierOptions);
  refreshModifierOptions();

  function refresh(): void {
    elements.banner.hidden = model.errorBanner === null;
    elements.banner.textContent = model.errorBanner ?? "";
    if (model.scene) {
      elements.scene.innerHTML = renderScene(model.scene);
      const names = model.objectNames();
      if (names.join("\n") !== currentObjectOptions().join("\n")) {
        elements.object.innerHTML = "";
        for (const name of names) {
          const option = document.createElement("option");
          option.value = name;
          option.textContent = name;
          elements.object.appendChild(option);
        }
      }
    }
    elements.timeline.innerHTML = "";
    for (const entry of model.timeline) {
      const item = document.createElement("li");
      item.className = entry.kind + (entry.success === false ? " failed" : "");
      item.textContent = entry.text;
      elements.timeline.appendChild(item);
    }
    elements.send.disabled = sessionId === null;
  }

  function currentObjectOptions(): string[] {
    return Array.from(elements.object.options).map((o) => o.value);
  }

  function surface(error: unknown): void {
    if (error instanceof GatewayError) {
      model.pushError(`${error.payload.code}: ${error.payload.message}`);
    } else {
      model.pushError(String(error));
    }
    refresh();
  }

  async function connect(scenario: string, seed: number): Promise<void> {
    try {
      stream?.close();
      const created = await client.createSession(scenario, seed);
      sessionId = created.session_id;
      model.resetScene(created.state);
      model.pushNote(`connected to ${scenario} as ${sessionId}`);
      elements.sessionLabel.textContent = sessionId;
      stream = client.openStream(sessionId, {
        onEvent: (event) => {
          if (model.applyEvent(event)) refresh();
        },
        onError: (message) => {
          model.pushError(message);
          refresh();
        },
      });
      refresh();
    } catch (error) {
      surface(error);
    }
  }

  async function sendSkill(): Promise<void> {
    if (!sessionId) return;
    const modifier = elements.modifier.disabled ? null : elements.modifier.value;
    try {
      const result = await client.postSkill(
        sessionId, elements.skill.value, elements.object.value, modifier,
      );
      model.recordSkillResult(
        result.instruction, result.outcome.success, result.outcome.reason,
      );
      elements.skillResult.textContent = result.outcome.success
        ? result.instruction
        : `${result.instruction} — ${result.outcome.reason}`;
      model.resetScene(result.state);
      refresh();
    } catch (error) {
      if (error instanceof GatewayError) {
        elements.skillResult.textContent = `rejected: ${error.payload.message}`;
      }
      surface(error);
    }
  }

  function showDiagnostics(issues: { errors: unknown[]; warnings: unknown[] }): void {
    const parts: string[] = [];
    for (const issue of issues.errors as { message: string }[]) {
      parts.push(`error: ${issue.message}`);
    }
    for (const issue of issues.warnings as { message: string }[]) {
      parts.push(`warning: ${issue.message}`);
    }
    elements.diagnostics.textContent = parts.length ? parts.join("\n") : "plan looks good";
  }

  async function submitPlan(mode: "validate_only" | "execute"): Promise<void> {
    if (!sessionId) return;
    const program = elements.program.value;
    try {
      if (mode === "validate_only") {
        showDiagnostics(await client.validatePlan(sessionId, program));
        return;
      }
      const result = await client.executePlan(sessionId, program);
      for (const entry of result.log) {
        model.recordPlanEntry(entry.call_index, entry.instruction, entry.success, entry.reason);
      }
      model.resetScene(result.state);
      refresh();
    } catch (error) {
      if (error instanceof GatewayError) {
        elements.diagnostics.textContent =
          `${error.payload.code}: ${error.payload.message}`;
      }
      surface(error);
    }
  }

  async function markOutcome(succeeded: boolean): Promise<void> {
    if (!sessionId) return;
    try {
      await client.markOutcome(sessionId, elements.task.value, succeeded);
      model.pushNote(`outcome recorded: ${succeeded ? "success" : "failure"}`);
      refresh();
    } catch (error) {
      surface(error);
    }
  }

  const debouncedValidate = debounce(
    () => void submitPlan("validate_only"),
    options.validateDelayMs ?? 400,
  );
  elements.program.addEventListener("input", () => debouncedValidate());
  elements.connectButton.addEventListener("click", () =>
    void connect(elements.scenario.value, Number(elements.seed.value)),
  );
  elements.send.addEventListener("click", () => void sendSkill());
  elements.validateButton.addEventListener("click", () => void submitPlan("validate_only"));
  elements.executeButton.addEventListener("click", () => void submitPlan("execute"));
  elements.markSuccess.addEventListener("click", () => void markOutcome(true));
  elements.markFailure.addEventListener("click", () => void markOutcome(false));

  return { model, connect, sendSkill, submitPlan, markOutcome, refresh, elements };
}
