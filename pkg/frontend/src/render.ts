/** DOM rendering of the UiModel. Pure model -> DOM, no game logic here. */
import { GRID, type UiModel } from "./state.js";

export interface Dom {
  grid: HTMLElement;        // container with 64 .cell children
  fixation: HTMLElement;    // the centered red cross overlay
  timeGauge: HTMLElement;   // 8 .led children
  scoreGauge: HTMLElement;
  objectiveGauge: HTMLElement;
  feedback: HTMLElement;    // glyph area
  vibe: HTMLElement;        // wrist-vibration indicator
  prompt: HTMLElement;
  status: HTMLElement;
}

export function buildGrid(container: HTMLElement,
                          onPress: (cell: [number, number]) => void): void {
  for (let r = 0; r < GRID; r++) {
    for (let c = 0; c < GRID; c++) {
      const el = document.createElement("button");
      el.className = "cell";
      el.addEventListener("click", () => onPress([r, c]));
      container.appendChild(el);
    }
  }
}

export function buildGauge(container: HTMLElement): void {
  for (let i = 0; i < 8; i++) {
    const el = document.createElement("span");
    el.className = "led";
    container.appendChild(el);
  }
}

function setLeds(gauge: HTMLElement, lit: number): void {
  gauge.childNodes.forEach((node, i) => {
    (node as HTMLElement).classList.toggle("on", i < lit);
  });
}

const GLYPH: Record<string, string> = {
  success: "✓",   // check mark
  failure: "✗",   // cross mark
  "": "",
};

export function render(m: UiModel, dom: Dom): void {
  dom.grid.childNodes.forEach((node, i) => {
    const el = node as HTMLElement;
    el.className = `cell ${m.grid[i]}`;
  });
  dom.fixation.style.display = m.fixation ? "block" : "none";
  setLeds(dom.timeGauge, m.timeLeds);
  setLeds(dom.scoreGauge, m.scoreLeds);
  setLeds(dom.objectiveGauge, m.objectiveLeds);
  dom.feedback.textContent = GLYPH[m.feedback] ?? "";
  dom.feedback.className = `feedback ${m.feedback}`;
  dom.vibe.classList.toggle("pulsing", m.vibePulseUntil > 0);
  dom.prompt.textContent = m.prompt;
  dom.status.textContent = m.lastError ? `service: ${m.lastError}` : "";
}
