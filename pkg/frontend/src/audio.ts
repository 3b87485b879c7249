/** WebAudio output: continuous white noise plus 1 kHz probe beeps.
 *
 * The vibration "motor" is simulated as a low rumble following the
 * double-impulse pattern; swap `vibrate` to drive real hardware.
 */

const BEEP_HZ = 1000;
const BEEP_MS = 100;
const NOISE_GAIN = 0.04;
const BEEP_GAIN = 0.25;
const RUMBLE_HZ = 70;
const RUMBLE_GAIN = 0.12;

export class AudioEngine {
  private ctx: AudioContext | null = null;
  private noise: AudioBufferSourceNode | null = null;

  private ensure(): AudioContext {
    if (this.ctx === null) this.ctx = new AudioContext();
    if (this.ctx.state === "suspended") void this.ctx.resume();
    return this.ctx;
  }

  /** Start the continuous background noise (idempotent). */
  noiseStart(): void {
    const ctx = this.ensure();
    if (this.noise !== null) return;
    const seconds = 2;
    const buf = ctx.createBuffer(1, ctx.sampleRate * seconds, ctx.sampleRate);
    const data = buf.getChannelData(0);
    for (let i = 0; i < data.length; i++) data[i] = Math.random() * 2 - 1;
    const src = ctx.createBufferSource();
    src.buffer = buf;
    src.loop = true;
    const gain = ctx.createGain();
    gain.gain.value = NOISE_GAIN;
    src.connect(gain).connect(ctx.destination);
    src.start();
    this.noise = src;
  }

  noiseStop(): void {
    if (this.noise !== null) {
      this.noise.stop();
      this.noise = null;
    }
  }

  /** 100 ms probe tone at 1 kHz, mixed over the noise bed. */
  beep(): void {
    const ctx = this.ensure();
    const osc = ctx.createOscillator();
    osc.frequency.value = BEEP_HZ;
    const gain = ctx.createGain();
    gain.gain.value = BEEP_GAIN;
    osc.connect(gain).connect(ctx.destination);
    const t = ctx.currentTime;
    osc.start(t);
    osc.stop(t + BEEP_MS / 1000);
  }

  /** Audible stand-in for the wrist double impulse. */
  vibrate(p1Ms: number, gapMs: number, p2Ms: number): void {
    const ctx = this.ensure();
    const t = ctx.currentTime;
    for (const [start, dur] of [
      [0, p1Ms / 1000],
      [(p1Ms + gapMs) / 1000, p2Ms / 1000],
    ] as const) {
      const osc = ctx.createOscillator();
      osc.frequency.value = RUMBLE_HZ;
      const gain = ctx.createGain();
      gain.gain.value = RUMBLE_GAIN;
      osc.connect(gain).connect(ctx.destination);
      osc.start(t + start);
      osc.stop(t + start + dur);
    }
  }
}
