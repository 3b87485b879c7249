import assert from "node:assert/strict";
import { test } from "node:test";

import type { ServerMsg, TrialStartMsg } from "../src/protocol.js";
import { cellIndex, initialModel, reduce, tick } from "../src/state.js";

const trialStart = (pattern: [number, number][]): TrialStartMsg => ({
  type: "trial_start", t: 1.0, pattern, fixation_ms: 500, cell_ms: 250,
  time_limit_ms: null,
});

test("welcome readies the console", () => {
  const m = initialModel();
  reduce(m, { type: "welcome", v: 1 }, 0);
  assert.equal(m.phase, "ready");
});

test("block start begins the background noise", () => {
  const m = initialModel();
  const fx = reduce(m, { type: "block_start", mode: "live",
                         config: { condition: "DSGR", duration: 480,
                                   seed: 1 } } as ServerMsg, 0);
  assert.deepEqual(fx, [{ kind: "noise-start" }]);
  assert.equal(m.condition, "DSGR");
});

test("trial presentation: fixation cross, then cells one by one", () => {
  const m = initialModel();
  const pattern: [number, number][] = [[0, 0], [2, 3], [7, 7]];
  reduce(m, trialStart(pattern), 1000);

  tick(m, 1000);                       // inside the 500 ms fixation
  assert.equal(m.phase, "fixation");
  assert.ok(m.fixation);
  assert.ok(m.grid.every((c) => c === "off"));

  tick(m, 1000 + 500);                 // first cell of the display window
  assert.equal(m.phase, "display");
  assert.ok(!m.fixation);
  assert.equal(m.grid[cellIndex([0, 0])], "shown");
  assert.equal(m.grid[cellIndex([2, 3])], "off");

  tick(m, 1000 + 500 + 260);           // second cell joined
  assert.equal(m.grid[cellIndex([2, 3])], "shown");
  assert.equal(m.grid[cellIndex([7, 7])], "off");

  tick(m, 1000 + 500 + 3 * 250);       // display over -> reproduction
  assert.equal(m.phase, "input");
  assert.ok(m.grid.every((c) => c === "off"));
});

test("snapshots drive gauges always, grid only during input", () => {
  const m = initialModel();
  reduce(m, trialStart([[1, 1]]), 0);
  const snap: ServerMsg = {
    type: "snapshot", t: 2.0, time_leds: 5, score_leds: 4, objective_leds: 6,
    score: 8, objective: 12, lit: [[4, 4]], feedback: "",
  };
  reduce(m, snap, 100);                // during fixation: gauges only
  assert.equal(m.timeLeds, 5);
  assert.equal(m.grid[cellIndex([4, 4])], "off");

  tick(m, 5000);                       // now in the reproduction phase
  reduce(m, snap, 5000);
  assert.equal(m.grid[cellIndex([4, 4])], "lit");
});

test("trial end shows the feedback glyph and recolors lit cells", () => {
  const m = initialModel();
  reduce(m, trialStart([[1, 1]]), 0);
  tick(m, 5000);
  reduce(m, { type: "snapshot", t: 2, time_leds: 0, score_leds: 0,
              objective_leds: 0, score: 0, objective: 12, lit: [[1, 1]],
              feedback: "" }, 5000);
  reduce(m, { type: "trial_end", t: 3, kind: "success", score: 9,
              next_length: 8 }, 6000);
  assert.equal(m.feedback, "success");
  assert.equal(m.grid[cellIndex([1, 1])], "success");
  assert.equal(m.trial, null);
});

test("vibe requests a double pulse and arms the indicator", () => {
  const m = initialModel();
  const fx = reduce(m, { type: "vibe", t: 1, p1_ms: 60, gap_ms: 80,
                         p2_ms: 60, motors: 3 }, 1000);
  assert.deepEqual(fx, [{ kind: "vibe", p1_ms: 60, gap_ms: 80, p2_ms: 60 }]);
  assert.equal(m.vibePulseUntil, 1200);
  tick(m, 1150);
  assert.equal(m.vibePulseUntil, 1200);  // still pulsing
  tick(m, 1250);
  assert.equal(m.vibePulseUntil, 0);     // indicator released
});

test("beep is a pure effect", () => {
  const m = initialModel();
  const fx = reduce(m, { type: "beep", t: 4.2 }, 0);
  assert.deepEqual(fx, [{ kind: "beep" }]);
});

test("block end silences the noise and clears the stage", () => {
  const m = initialModel();
  reduce(m, trialStart([[1, 1]]), 0);
  const fx = reduce(m, { type: "block_end", t: 480 }, 10_000);
  assert.deepEqual(fx, [{ kind: "noise-stop" }]);
  assert.equal(m.phase, "idle");
  assert.equal(m.trial, null);
  assert.ok(m.grid.every((c) => c === "off"));
});

test("errors surface without derailing the model", () => {
  const m = initialModel();
  reduce(m, { type: "welcome", v: 1 }, 0);
  reduce(m, { type: "error", error: "a session is already active" }, 0);
  assert.equal(m.phase, "ready");
  assert.match(m.lastError, /active/);
});
