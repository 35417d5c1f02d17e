/**
 * Timeline scrubbing over a parsed trace: position 0 shows the initial
 * frame, position k shows the world after the k-th action. Execution
 * replays add bomb markers wherever mutated code ran.
 */

import type { Frame, ParsedTrace } from "./trace.js";

export interface ScrubberState {
  trace: ParsedTrace;
  position: number;
  markers: ReadonlySet<number>;
}

export function clampPosition(trace: ParsedTrace, position: number): number {
  if (!Number.isFinite(position)) return 0;
  return Math.max(0, Math.min(trace.length, Math.round(position)));
}

export function frameAt(trace: ParsedTrace, position: number): Frame {
  const at = clampPosition(trace, position);
  return at === 0 ? trace.initial : trace.frames[at - 1]!;
}

/** Parse the report's comma-separated mutated-step list ("-" means none). */
export function parseMarkers(csv: string): Set<number> {
  if (csv === "-" || csv === "") return new Set();
  return new Set(csv.split(",").map(Number));
}

export function createScrubber(trace: ParsedTrace, markers: Iterable<number> = []): ScrubberState {
  return { trace, position: 0, markers: new Set(markers) };
}

export function scrubTo(state: ScrubberState, position: number): ScrubberState {
  return { ...state, position: clampPosition(state.trace, position) };
}

export function markerAtCurrent(state: ScrubberState): boolean {
  return state.position > 0 && state.markers.has(state.position - 1);
}

/**
 * Scope pinned from the slider: a single stop pins AT, a drag pins a
 * WINDOW ordered low-to-high. Positions refer to steps, so they clamp
 * to [0, length - 1] where the trace has frames to check.
 */
export function scopeFromSlider(
  trace: ParsedTrace,
  from: number,
  to?: number,
): { type: "at"; t: number } | { type: "window"; t1: number; t2: number } {
  const last = Math.max(0, trace.length - 1);
  const lo = Math.max(0, Math.min(last, Math.round(from)));
  if (to === undefined) return { type: "at", t: lo };
  const hi = Math.max(0, Math.min(last, Math.round(to)));
  return { type: "window", t1: Math.min(lo, hi), t2: Math.max(lo, hi) };
}
