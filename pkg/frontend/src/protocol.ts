/** Wire protocol: typed views of the session service's JSON frames.
 *
 * The service is the single source of truth for game state; the UI only
 * renders what it is told. Client timestamps are advisory — the engine
 * re-times every input on its own clock.
 */

export interface WelcomeMsg { type: "welcome"; v: number }
export interface ErrorMsg { type: "error"; error: string }

export interface BlockStartMsg {
  type: "block_start";
  mode: "live" | "scripted";
  config: { condition: string; duration: number; seed: number };
}

export interface SnapshotMsg {
  type: "snapshot";
  t: number;
  time_leds: number;
  score_leds: number;
  objective_leds: number;
  score: number;
  objective: number;
  lit: [number, number][];
  feedback: string;
}

export interface TrialStartMsg {
  type: "trial_start";
  t: number;
  pattern: [number, number][];
  fixation_ms: number;
  cell_ms: number;
  time_limit_ms: number | null;
}

export interface TrialEndMsg {
  type: "trial_end";
  t: number;
  kind: "success" | "failure" | "timeout";
  score: number | null;
  next_length: number;
}

export interface VibeMsg {
  type: "vibe";
  t: number;
  p1_ms: number;
  gap_ms: number;
  p2_ms: number;
  motors: number;
}

export interface BeepMsg { type: "beep"; t: number }

export interface RecordMsg {
  type: "record";
  incomplete: boolean;
  features: (number | null)[];   // null = feature undefined for this block
  n_events: number;
}

export interface BlockEndMsg {
  type: "block_end";
  t: number;
  features?: (number | null)[];
}

export type ServerMsg =
  | WelcomeMsg | ErrorMsg | BlockStartMsg | SnapshotMsg | TrialStartMsg
  | TrialEndMsg | VibeMsg | BeepMsg | RecordMsg | BlockEndMsg;

const KNOWN_TYPES = new Set([
  "welcome", "error", "block_start", "snapshot", "trial_start", "trial_end",
  "vibe", "beep", "record", "block_end",
]);

/** Parse one frame; returns null for anything we cannot render. */
export function parseServerMsg(raw: string): ServerMsg | null {
  let msg: unknown;
  try {
    msg = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof msg !== "object" || msg === null) return null;
  const type = (msg as { type?: unknown }).type;
  if (typeof type !== "string" || !KNOWN_TYPES.has(type)) return null;
  return msg as ServerMsg;
}

// ---------------------------------------------------------------------------
// client -> server

export function startMsg(condition: string, duration: number,
                         seed: number): string {
  return JSON.stringify({ type: "start", condition, duration, seed });
}

export function pressMsg(cell: [number, number], clientT: number): string {
  return JSON.stringify({ type: "press", cell, t: clientT });
}

export function validateMsg(clientT: number): string {
  return JSON.stringify({ type: "validate", t: clientT });
}

export function pedalMsg(clientT: number): string {
  return JSON.stringify({ type: "pedal", t: clientT });
}
