import { describe, expect, it } from "vitest";

import { decodeResponse, encodeSteer, encodeTick, isTickResult } from "../src/protocol.js";

describe("request encoding", () => {
  it("steer frames carry the exact wire field names", () => {
    const frame = JSON.parse(encodeSteer("s1", "left", 2.5));
    expect(frame).toEqual({ id: "s1", kind: "steer", direction: "left", gain_deg: 2.5 });
  });

  it("gain is omitted when not given, so the server default applies", () => {
    const frame = JSON.parse(encodeSteer("s2", "up"));
    expect(frame).toEqual({ id: "s2", kind: "steer", direction: "up" });
  });

  it("tick frames optionally pin the target class", () => {
    expect(JSON.parse(encodeTick("t1"))).toEqual({ id: "t1", kind: "tick" });
    expect(JSON.parse(encodeTick("t2", 41))).toEqual({ id: "t2", kind: "tick", target_class: 41 });
  });

  it("frames are single lines", () => {
    expect(encodeSteer("a", "down", 1)).not.toContain("\n");
    expect(encodeTick("b", 0)).not.toContain("\n");
  });
});

describe("response decoding", () => {
  it("round-trips a tick response", () => {
    const resp = decodeResponse(
      JSON.stringify({
        id: "t9",
        result: {
          phase: "approaching",
          direction: null,
          d: 0.21,
          pattern: { on_ms: 200, off_ms: 100, continuous: false },
          speech: null,
          locked_tone: false,
          pose: { pan_deg: 4, tilt_deg: -1 },
          detections: [],
        },
        error: null,
        seq: 12,
        completed_index: 12,
      }),
    );
    expect(resp.id).toBe("t9");
    expect(isTickResult(resp.result)).toBe(true);
  });

  it("rejects garbage, non-objects and id-less frames", () => {
    expect(() => decodeResponse("{nope")).toThrow(/not a JSON frame/);
    expect(() => decodeResponse("[1,2]")).toThrow(/JSON object/);
    expect(() => decodeResponse('"str"')).toThrow(/JSON object/);
    expect(() => decodeResponse("{}")).toThrow(/no id/);
  });

  it("isTickResult tells tick payloads apart from text results", () => {
    expect(isTickResult("A desk with a cup.")).toBe(false);
    expect(isTickResult({ pose: {} })).toBe(false);
    expect(isTickResult(null)).toBe(false);
  });
});
