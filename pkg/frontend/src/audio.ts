/**
 * Turns pulse patterns into sound. The synth and the timers are injected so
 * tests can count beeps with fake clocks; the browser wiring lives at the
 * bottom.
 */
import type { PulsePattern } from "./protocol.js";

export interface Synth {
  /** Short beep of the given length. */
  beep(durationMs: number): void;
  /** Sustained tone on/off for the continuous (locked) pattern. */
  toneOn(): void;
  toneOff(): void;
  /** One-shot confirmation chirp, distinct from the beeps. */
  ding(): void;
}

type Timers = {
  set: (fn: () => void, ms: number) => unknown;
  clear: (handle: unknown) => void;
};

const defaultTimers: Timers = {
  set: (fn, ms) => setTimeout(fn, ms),
  clear: (h) => clearTimeout(h as Parameters<typeof clearTimeout>[0]),
};

/**
 * Plays whatever pattern it was last given: pulsed patterns beep every
 * on+off milliseconds (so (200,300) beeps at 2 Hz), the continuous pattern
 * holds a tone, null is silence.
 */
export class CadencePlayer {
  private handle: unknown = null;
  private current: PulsePattern | null = null;
  private toneHeld = false;

  constructor(private synth: Synth, private timers: Timers = defaultTimers) {}

  get pattern(): PulsePattern | null {
    return this.current;
  }

  setPattern(pattern: PulsePattern | null): void {
    if (samePattern(this.current, pattern)) return; // don't restart the phase
    this.stop();
    this.current = pattern;
    if (!pattern) return;
    if (pattern.continuous) {
      this.synth.toneOn();
      this.toneHeld = true;
      return;
    }
    const period = pattern.on_ms + pattern.off_ms;
    const fire = () => {
      this.synth.beep(pattern.on_ms);
      this.handle = this.timers.set(fire, period);
    };
    fire();
  }

  lockedTone(): void {
    this.synth.ding();
  }

  stop(): void {
    if (this.handle !== null) {
      this.timers.clear(this.handle);
      this.handle = null;
    }
    if (this.toneHeld) {
      this.synth.toneOff();
      this.toneHeld = false;
    }
    this.current = null;
  }
}

function samePattern(a: PulsePattern | null, b: PulsePattern | null): boolean {
  if (a === null || b === null) return a === b;
  return a.on_ms === b.on_ms && a.off_ms === b.off_ms && a.continuous === b.continuous;
}

/** Browser synth on the native audio-synthesis API. No audio assets. */
export function webAudioSynth(ctx: AudioContext): Synth {
  let held: { osc: OscillatorNode; gain: GainNode } | null = null;

  const blip = (freq: number, durationMs: number, level = 0.12) => {
    const osc = ctx.createOscillator();
    const gain = ctx.createGain();
    osc.connect(gain);
    gain.connect(ctx.destination);
    osc.type = "sine";
    osc.frequency.value = freq;
    const now = ctx.currentTime;
    gain.gain.setValueAtTime(level, now);
    gain.gain.exponentialRampToValueAtTime(0.001, now + durationMs / 1000);
    osc.start(now);
    osc.stop(now + durationMs / 1000);
  };

  return {
    beep: (durationMs) => blip(880, durationMs),
    toneOn: () => {
      if (held) return;
      const osc = ctx.createOscillator();
      const gain = ctx.createGain();
      osc.connect(gain);
      gain.connect(ctx.destination);
      osc.type = "sine";
      osc.frequency.value = 660;
      gain.gain.value = 0.08;
      osc.start();
      held = { osc, gain };
    },
    toneOff: () => {
      if (!held) return;
      held.osc.stop();
      held = null;
    },
    ding: () => blip(1320, 350, 0.2),
  };
}
