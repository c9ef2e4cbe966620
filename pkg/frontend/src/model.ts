/**
 * Console state, kept free of DOM concerns so the ordering and palette
 * invariants are directly testable.
 *
 * Invariants enforced here:
 * - every stream event lands in the timeline exactly once, in seq order
 *   (duplicates dropped, regressions dropped, gaps surfaced as errors);
 * - the modifier palette is derived from the selected skill, so an invalid
 *   (skill, modifier) pair is never constructible.
 */

import type { SceneSnapshot, StreamEvent } from "./api.js";

export const SKILL_MODIFIERS: Record<string, readonly string[]> = {
  grasp: ["top-down", "side", "diagonal"],
  reorient: ["horizontal", "upright"],
  lift: [],
  place: [],
};

export const SKILL_NAMES = Object.keys(SKILL_MODIFIERS);

export function allowedModifiers(skill: string): readonly string[] {
  const modifiers = SKILL_MODIFIERS[skill];
  if (modifiers === undefined) {
    throw new Error(`unknown skill: ${skill}`);
  }
  return modifiers;
}

export function isValidSelection(skill: string, modifier: string | null): boolean {
  const modifiers = SKILL_MODIFIERS[skill];
  if (modifiers === undefined) return false;
  if (modifiers.length === 0) return modifier === null;
  return modifier !== null && modifiers.includes(modifier);
}

export interface TimelineEntry {
  kind: "step" | "skill" | "plan_call" | "error" | "note";
  text: string;
  success?: boolean;
  seq?: number;
}

export class ConsoleModel {
  scene: SceneSnapshot | null = null;
  lastSeq = -1;
  /** Per-step stream events, exactly once each, in order. */
  events: StreamEvent[] = [];
  /** Human-readable feed: one entry per completed skill / plan call / error. */
  timeline: TimelineEntry[] = [];
  errorBanner: string | null = null;

  /** Apply a stream event; returns true when it was new and in order. */
  applyEvent(event: StreamEvent): boolean {
    if (event.seq <= this.lastSeq) {
      return false; // duplicate or stale delivery: render exactly once
    }
    if (this.lastSeq >= 0 && event.seq !== this.lastSeq + 1) {
      this.pushError(`missed events ${this.lastSeq + 1}..${event.seq - 1}`);
    }
    this.lastSeq = event.seq;
    this.events.push(event);
    this.scene = event.scene;
    return true;
  }

  /** Adopt a freshly fetched snapshot (connect/reconnect). */
  resetScene(scene: SceneSnapshot): void {
    this.scene = scene;
    this.errorBanner = null;
  }

  recordSkillResult(instruction: string, success: boolean, reason: string): void {
    const text = success ? instruction : `${instruction} — failed: ${reason}`;
    this.timeline.push({ kind: "skill", text, success });
  }

  recordPlanEntry(index: number, instruction: string, success: boolean, reason: string): void {
    const text = success
      ? `[${index}] ${instruction}`
      : `[${index}] ${instruction} — failed: ${reason}`;
    this.timeline.push({ kind: "plan_call", text, success });
  }

  pushError(message: string): void {
    this.errorBanner = message;
    this.timeline.push({ kind: "error", text: message });
  }

  pushNote(message: string): void {
    this.timeline.push({ kind: "note", text: message });
  }

  objectNames(): string[] {
    return this.scene ? Object.keys(this.scene.objects).sort() : [];
  }
}

/** Debounce used by the plan editor's validate-on-idle. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
  timers: { set: typeof setTimeout; clear: typeof clearTimeout } = {
    set: setTimeout,
    clear: clearTimeout,
  },
): (...args: A) => void {
  let pending: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    if (pending !== undefined) timers.clear(pending);
    pending = timers.set(() => fn(...args), waitMs);
  };
}
