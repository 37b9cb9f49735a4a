/**
 * Wire schema for the offload server: one JSON object per line (TCP) or per
 * text frame (WebSocket). Field names match the server exactly; this module
 * is the only place that knows them.
 */

export type Direction = "left" | "right" | "up" | "down";

export interface PulsePattern {
  on_ms: number;
  off_ms: number;
  continuous: boolean;
}

export interface Pose {
  pan_deg: number;
  tilt_deg: number;
}

/** Payload of a `tick` response: everything the page is allowed to show. */
export interface TickResult {
  phase: string;
  direction: Direction | null;
  d: number | null;
  pattern: PulsePattern | null;
  speech: string | null;
  locked_tone: boolean;
  pose: Pose;
  detections: unknown[];
}

export interface ServerResponse {
  id: string | null;
  result?: unknown;
  error?: string | null;
  server_ms?: number | null;
  queue_ms?: number | null;
  seq?: number | null;
  completed_index?: number | null;
  prompt?: string | null;
}

export function encodeSteer(id: string, direction: Direction, gainDeg?: number): string {
  const frame: Record<string, unknown> = { id, kind: "steer", direction };
  if (gainDeg !== undefined) frame.gain_deg = gainDeg;
  return JSON.stringify(frame);
}

export function encodeTick(id: string, targetClass?: number): string {
  const frame: Record<string, unknown> = { id, kind: "tick" };
  if (targetClass !== undefined) frame.target_class = targetClass;
  return JSON.stringify(frame);
}

export function decodeResponse(text: string): ServerResponse {
  let obj: unknown;
  try {
    obj = JSON.parse(text);
  } catch {
    throw new Error(`not a JSON frame: ${text.slice(0, 80)}`);
  }
  if (typeof obj !== "object" || obj === null || Array.isArray(obj)) {
    throw new Error("response frame must be a JSON object");
  }
  const r = obj as Record<string, unknown>;
  if (!("id" in r)) throw new Error("response frame has no id");
  return r as unknown as ServerResponse;
}

export function isTickResult(result: unknown): result is TickResult {
  if (typeof result !== "object" || result === null) return false;
  const t = result as Record<string, unknown>;
  return typeof t.phase === "string" && "pose" in t && "locked_tone" in t;
}
