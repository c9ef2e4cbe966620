// @vitest-environment jsdom
import { beforeEach, describe, expect, it } from "vitest";

import { GatewayClient } from "../src/api.js";
import { createConsole, type ConsoleHandles } from "../src/app.js";
import { StubGateway, scene, streamEvent } from "./stub.js";

const POUR_LOG = [
  "grasp the pink cup in a side grasp",
  "hold and lift the pink cup",
  "reorient the pink cup to be horizontal",
  "reorient the pink cup to be upright",
  "place the pink cup",
].map((instruction, index) => ({
  call_index: index,
  call: { name: "grasp", object: "pink cup", modifier: null },
  instruction,
  success: true,
  reason: "",
}));

let stub: StubGateway;
let ui: ConsoleHandles;

beforeEach(() => {
  stub = new StubGateway();
  const client = new GatewayClient("http://gateway.test", {
    fetchImpl: stub.fetchImpl,
    socketFactory: stub.socketFactory,
  });
  document.body.innerHTML = '<div id="root"></div>';
  ui = createConsole(document.getElementById("root") as HTMLElement, client, {
    validateDelayMs: 5,
  });
});

describe("connecting", () => {
  it("renders the fetched scene and subscribes to the stream", async () => {
    await ui.connect("single_cup", 0);
    expect(stub.sockets).toHaveLength(1);
    expect(stub.sockets[0]!.url).toBe("ws://gateway.test/sessions/s-1/stream");
    expect(ui.elements.scene.querySelectorAll("svg")).toHaveLength(2);
    const objects = Array.from(
      (ui.elements.object as HTMLSelectElement).options,
    ).map((o) => o.value);
    expect(objects).toEqual(["pink cup"]);
  });

  it("shows an error banner for a dead session", async () => {
    stub.route("POST /sessions", () => ({
      status: 400,
      payload: { code: "unknown_scenario", message: "unknown scenario: 'moon'", detail: "" },
    }));
    await ui.connect("moon", 0);
    expect(ui.elements.banner.hidden).toBe(false);
    expect(ui.elements.banner.textContent).toContain("unknown_scenario");
  });
});

describe("stream rendering", () => {
  it("renders every streamed event exactly once, in order", async () => {
    await ui.connect("single_cup", 0);
    for (let seq = 0; seq < 25; seq++) {
      stub.emit(streamEvent(seq));
      if (seq % 7 === 0) stub.emit(streamEvent(seq)); // duplicate deliveries
    }
    stub.emit(streamEvent(5)); // stale replay
    expect(ui.model.events.map((e) => e.seq)).toEqual([...Array(25).keys()]);
    expect(ui.model.errorBanner).toBeNull();
  });

  it("keeps the scene in sync with the latest event", async () => {
    await ui.connect("single_cup", 0);
    const event = streamEvent(0);
    event.scene.objects["pink cup"]!.held = true;
    stub.emit(event);
    expect(ui.model.scene?.objects["pink cup"]?.held).toBe(true);
  });
});

describe("skill palette", () => {
  it("constrains modifier options to the selected skill", async () => {
    await ui.connect("single_cup", 0);
    const skill = ui.elements.skill as HTMLSelectElement;
    const modifier = ui.elements.modifier as HTMLSelectElement;

    skill.value = "grasp";
    skill.dispatchEvent(new Event("change"));
    expect(Array.from(modifier.options).map((o) => o.value)).toEqual(
      ["top-down", "side", "diagonal"],
    );
    expect(modifier.disabled).toBe(false);

    skill.value = "reorient";
    skill.dispatchEvent(new Event("change"));
    expect(Array.from(modifier.options).map((o) => o.value)).toEqual(
      ["horizontal", "upright"],
    );

    skill.value = "lift";
    skill.dispatchEvent(new Event("change"));
    expect(modifier.options).toHaveLength(0);
    expect(modifier.disabled).toBe(true);
  });

  it("sends no modifier for lift and shows the gateway's instruction verbatim", async () => {
    stub.route("POST /sessions/s-1/skill", (body) => ({
      payload: {
        outcome: { success: true, reason: "" },
        instruction: "hold and lift the pink cup",
        state: scene(),
      },
    }));
    await ui.connect("single_cup", 0);
    const skill = ui.elements.skill as HTMLSelectElement;
    skill.value = "lift";
    skill.dispatchEvent(new Event("change"));
    await ui.sendSkill();

    const sent = stub.requests.find((r) => r.path === "/sessions/s-1/skill");
    expect(sent?.body).toMatchObject({ name: "lift", modifier: null });
    expect(ui.elements.skillResult.textContent).toBe("hold and lift the pink cup");
    const texts = Array.from(ui.elements.timeline.querySelectorAll("li")).map(
      (li) => li.textContent,
    );
    expect(texts).toContain("hold and lift the pink cup");
  });

  it("shows rejection reasons inline", async () => {
    stub.route("POST /sessions/s-1/skill", () => ({
      status: 409,
      payload: { code: "rejected", message: "cannot lift 'pink cup': not held", detail: "" },
    }));
    await ui.connect("single_cup", 0);
    const skill = ui.elements.skill as HTMLSelectElement;
    skill.value = "lift";
    skill.dispatchEvent(new Event("change"));
    await ui.sendSkill();
    expect(ui.elements.skillResult.textContent).toContain("rejected");
    expect(ui.elements.skillResult.textContent).toContain("not held");
  });
});

describe("plan editor", () => {
  it("executing the pour plan shows five ordered outcome entries", async () => {
    stub.route("POST /sessions/s-1/plan", (body) => {
      expect((body as { mode: string }).mode).toBe("execute");
      return { payload: { log: POUR_LOG, state: scene() } };
    });
    await ui.connect("single_cup", 0);
    (ui.elements.program as HTMLTextAreaElement).value =
      'grasp("pink cup", "side")\nlift("pink cup")\n' +
      'reorient("pink cup", "horizontal")\nreorient("pink cup", "upright")\n' +
      'place("pink cup")';
    await ui.submitPlan("execute");

    const entries = Array.from(
      ui.elements.timeline.querySelectorAll("li.plan_call"),
    ).map((li) => li.textContent);
    expect(entries).toEqual([
      "[0] grasp the pink cup in a side grasp",
      "[1] hold and lift the pink cup",
      "[2] reorient the pink cup to be horizontal",
      "[3] reorient the pink cup to be upright",
      "[4] place the pink cup",
    ]);
  });

  it("validate-only shows diagnostics with positions", async () => {
    stub.route("POST /sessions/s-1/plan", () => ({
      payload: {
        errors: [{ code: "syntax", message: "expected ')' (line 1, column 12)", line: 1, column: 12 }],
        warnings: [],
      },
    }));
    await ui.connect("single_cup", 0);
    (ui.elements.program as HTMLTextAreaElement).value = 'grasp("cup"';
    await ui.submitPlan("validate_only");
    expect(ui.elements.diagnostics.textContent).toContain("line 1, column 12");
  });

  it("validates on idle after typing (debounced)", async () => {
    stub.route("POST /sessions/s-1/plan", (body) => {
      expect((body as { mode: string }).mode).toBe("validate_only");
      return { payload: { errors: [], warnings: [] } };
    });
    await ui.connect("single_cup", 0);
    const program = ui.elements.program as HTMLTextAreaElement;
    program.value = 'lift("pink cup")';
    program.dispatchEvent(new Event("input"));
    program.value = 'lift("pink cup") place("pink cup")';
    program.dispatchEvent(new Event("input"));
    await new Promise((resolve) => setTimeout(resolve, 40));
    const validations = stub.requests.filter(
      (r) => r.path === "/sessions/s-1/plan" && (r.body as { mode: string }).mode === "validate_only",
    );
    expect(validations).toHaveLength(1); // burst collapsed to one
    expect(ui.elements.diagnostics.textContent).toBe("plan looks good");
  });
});

describe("outcome marking", () => {
  it("posts the task and success flag", async () => {
    stub.route("POST /sessions/s-1/outcome", () => ({ payload: { recorded: true } }));
    await ui.connect("single_cup", 0);
    (ui.elements.task as HTMLInputElement).value = "pour from the pink cup";
    await ui.markOutcome(true);
    const sent = stub.requests.find((r) => r.path === "/sessions/s-1/outcome");
    expect(sent?.body).toEqual({ task: "pour from the pink cup", succeeded: true });
  });

  it("surfaces the no-plan error", async () => {
    stub.route("POST /sessions/s-1/outcome", () => ({
      status: 409,
      payload: { code: "no_plan", message: "session has no executed plan to mark", detail: "" },
    }));
    await ui.connect("single_cup", 0);
    await ui.markOutcome(true);
    expect(ui.elements.banner.textContent).toContain("no_plan");
  });
});
