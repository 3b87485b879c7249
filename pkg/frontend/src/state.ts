/** Pure render model and its reducer.
 *
 * `reduce` folds server messages into the model; `tick` advances the local
 * presentation timeline (fixation cross, then the pattern cell by cell).
 * Both return side-effect requests (sounds, vibration pulses) instead of
 * performing them, which keeps this module trivially testable.
 */
import type { ServerMsg, TrialStartMsg } from "./protocol.js";

export const GRID = 8;

export type Phase =
  | "idle" | "ready" | "fixation" | "display" | "input" | "done";

export type CellState = "off" | "shown" | "lit" | "success" | "failure";

export interface Effect {
  kind: "beep" | "vibe" | "noise-start" | "noise-stop";
  p1_ms?: number;
  gap_ms?: number;
  p2_ms?: number;
}

export interface UiModel {
  phase: Phase;
  prompt: string;
  condition: string;
  grid: CellState[];          // 64 cells, row-major
  fixation: boolean;          // centered red cross visible
  timeLeds: number;           // 0..8
  scoreLeds: number;
  objectiveLeds: number;
  score: number | null;
  feedback: string;           // "", "success", "failure"
  vibePulseUntil: number;     // local ms; vibration indicator active until
  // trial presentation timeline (local clock, ms)
  trial: TrialStartMsg | null;
  trialShownAt: number;
  lastError: string;
}

export function initialModel(): UiModel {
  return {
    phase: "idle",
    prompt: "connecting…",
    condition: "",
    grid: new Array(GRID * GRID).fill("off"),
    fixation: false,
    timeLeds: 0,
    scoreLeds: 0,
    objectiveLeds: 0,
    score: null,
    feedback: "",
    vibePulseUntil: 0,
    trial: null,
    trialShownAt: 0,
    lastError: "",
  };
}

function blankGrid(): CellState[] {
  return new Array(GRID * GRID).fill("off");
}

export function cellIndex(cell: [number, number]): number {
  return cell[0] * GRID + cell[1];
}

/** Fold one server message into the model. Returns requested effects. */
export function reduce(m: UiModel, msg: ServerMsg, nowMs: number): Effect[] {
  const fx: Effect[] = [];
  switch (msg.type) {
    case "welcome":
      m.phase = "ready";
      m.prompt = "ready — choose a condition to start";
      break;
    case "error":
      m.lastError = msg.error;
      break;
    case "block_start":
      m.phase = "fixation";
      m.condition = msg.config.condition;
      m.prompt = "";
      m.grid = blankGrid();
      fx.push({ kind: "noise-start" });
      break;
    case "trial_start":
      m.trial = msg;
      m.trialShownAt = nowMs;
      m.phase = "fixation";
      m.fixation = true;
      m.feedback = "";
      m.grid = blankGrid();
      break;
    case "snapshot":
      m.timeLeds = msg.time_leds;
      m.scoreLeds = msg.score_leds;
      m.objectiveLeds = msg.objective_leds;
      m.score = msg.score;
      // during reproduction the engine's lit set drives the grid
      if (m.phase === "input") {
        m.grid = blankGrid();
        for (const c of msg.lit) m.grid[cellIndex(c)] = "lit";
      }
      break;
    case "trial_end": {
      m.phase = "done";
      m.fixation = false;
      m.feedback = msg.kind === "success" ? "success" : "failure";
      const state: CellState = msg.kind === "success" ? "success" : "failure";
      m.grid = m.grid.map((c) => (c === "lit" ? state : "off"));
      m.trial = null;
      break;
    }
    case "vibe":
      m.vibePulseUntil = nowMs + msg.p1_ms + msg.gap_ms + msg.p2_ms;
      fx.push({ kind: "vibe", p1_ms: msg.p1_ms, gap_ms: msg.gap_ms,
                p2_ms: msg.p2_ms });
      break;
    case "beep":
      fx.push({ kind: "beep" });
      break;
    case "record":
      break;
    case "block_end":
      m.phase = "idle";
      m.prompt = "block complete";
      m.grid = blankGrid();
      m.fixation = false;
      m.trial = null;
      fx.push({ kind: "noise-stop" });
      break;
  }
  return fx;
}

/** Advance the local presentation timeline (fixation -> display -> input). */
export function tick(m: UiModel, nowMs: number): void {
  if (m.vibePulseUntil && nowMs >= m.vibePulseUntil) m.vibePulseUntil = 0;
  const trial = m.trial;
  if (trial === null) return;
  const elapsed = nowMs - m.trialShownAt;
  if (elapsed < trial.fixation_ms) {
    m.phase = "fixation";
    m.fixation = true;
    return;
  }
  m.fixation = false;
  const displayMs = trial.cell_ms * trial.pattern.length;
  if (elapsed < trial.fixation_ms + displayMs) {
    // cells appear one by one and stay on until the display window ends
    m.phase = "display";
    const upto = Math.floor((elapsed - trial.fixation_ms) / trial.cell_ms) + 1;
    m.grid = blankGrid();
    for (const c of trial.pattern.slice(0, upto)) {
      m.grid[cellIndex(c)] = "shown";
    }
    return;
  }
  if (m.phase !== "input") {
    // hold period then reproduction; inputs before this are engine-ignored
    m.phase = "input";
    m.grid = blankGrid();
  }
}
