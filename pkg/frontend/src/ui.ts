/** Pure view -> render-model mapping; the DOM writes live in main.ts. */
import type { SessionView } from "./session.js";

export interface RenderModel {
  banner: string | null;
  phaseLabel: string;
  dLabel: string;
  caption: string;
  lockBadge: boolean;
  /** Flashing bar mirror of the haptic channel, for silent environments. */
  pulse: { label: string; periodMs: number | null; continuous: boolean } | null;
  poseLabel: string;
  logTail: string[];
}

export function renderModel(view: SessionView, logLines = 8): RenderModel {
  let pulse: RenderModel["pulse"] = null;
  if (view.pattern) {
    if (view.pattern.continuous) {
      pulse = { label: "continuous", periodMs: null, continuous: true };
    } else {
      const period = view.pattern.on_ms + view.pattern.off_ms;
      pulse = {
        label: `${view.pattern.on_ms}/${view.pattern.off_ms} ms (${(1000 / period).toFixed(2)} Hz)`,
        periodMs: period,
        continuous: false,
      };
    }
  }
  return {
    banner: view.banner,
    phaseLabel: view.phase.toUpperCase(),
    dLabel: view.d === null ? "d = —" : `d = ${view.d.toFixed(3)}`,
    caption: view.caption,
    lockBadge: view.locked,
    pulse,
    poseLabel: view.pose
      ? `pan ${view.pose.pan_deg.toFixed(1)}°  tilt ${view.pose.tilt_deg.toFixed(1)}°`
      : "pose unknown",
    logTail: view.log.slice(-logLines).map((e) => e.text),
  };
}
