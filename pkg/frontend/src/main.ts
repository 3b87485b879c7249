/** Entry point: wires the websocket, the reducer, rendering and input. */
import { AudioEngine } from "./audio.js";
import { parseServerMsg, pedalMsg, pressMsg, startMsg,
         validateMsg } from "./protocol.js";
import { buildGauge, buildGrid, render, type Dom } from "./render.js";
import { initialModel, reduce, tick, type Effect } from "./state.js";

const FOOTSWITCH_KEY = " ";   // space bar stands in for the pedal
const VALIDATE_KEY = "Enter";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node;
}

function main(): void {
  const model = initialModel();
  const audio = new AudioEngine();
  const ws = new WebSocket(`ws://${location.host}/ws`);

  const dom: Dom = {
    grid: el("grid"),
    fixation: el("fixation"),
    timeGauge: el("time-gauge"),
    scoreGauge: el("score-gauge"),
    objectiveGauge: el("objective-gauge"),
    feedback: el("feedback"),
    vibe: el("vibe"),
    prompt: el("prompt"),
    status: el("status"),
  };

  buildGrid(dom.grid, (cell) => {
    if (ws.readyState === WebSocket.OPEN) {
      ws.send(pressMsg(cell, performance.now()));
    }
  });
  for (const g of [dom.timeGauge, dom.scoreGauge, dom.objectiveGauge]) {
    buildGauge(g);
  }

  const runEffects = (fx: Effect[]): void => {
    for (const f of fx) {
      if (f.kind === "beep") audio.beep();
      else if (f.kind === "noise-start") audio.noiseStart();
      else if (f.kind === "noise-stop") audio.noiseStop();
      else if (f.kind === "vibe") {
        audio.vibrate(f.p1_ms ?? 60, f.gap_ms ?? 80, f.p2_ms ?? 60);
      }
    }
  };

  ws.addEventListener("message", (ev) => {
    const msg = parseServerMsg(String(ev.data));
    if (msg !== null) runEffects(reduce(model, msg, performance.now()));
  });
  ws.addEventListener("close", () => {
    model.prompt = "disconnected — reload to reconnect";
    model.phase = "idle";
  });

  window.addEventListener("keydown", (ev) => {
    if (ws.readyState !== WebSocket.OPEN) return;
    if (ev.key === FOOTSWITCH_KEY) {
      ev.preventDefault();
      ws.send(pedalMsg(performance.now()));
    } else if (ev.key === VALIDATE_KEY) {
      ws.send(validateMsg(performance.now()));
    }
  });

  document.querySelectorAll<HTMLButtonElement>("[data-condition]")
    .forEach((btn) => {
      btn.addEventListener("click", () => {
        const cond = btn.dataset.condition ?? "EG";
        const duration = Number(
          (document.getElementById("duration") as HTMLInputElement).value);
        const seed = Number(
          (document.getElementById("seed") as HTMLInputElement).value);
        audio.noiseStart();  // user gesture unlocks the audio context
        ws.send(startMsg(cond, duration, seed));
      });
    });

  const frame = (): void => {
    tick(model, performance.now());
    render(model, dom);
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

main();
