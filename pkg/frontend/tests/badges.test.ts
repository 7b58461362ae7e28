import { describe, expect, test } from "vitest";

import {
  allErrorsAnchored,
  badgeMap,
  instanceBadgeSeverity,
  parseSubject,
} from "../src/badges.js";
import { DiagnosticJson } from "../src/types.js";

function diag(
  code: string,
  severity: "error" | "warning",
  subjects: string[],
): DiagnosticJson {
  return {
    code,
    severity,
    subjects,
    message: `${code} happened`,
    explanation_key: "k",
  };
}

describe("subject parsing", () => {
  test("all four anchor kinds", () => {
    expect(parseSubject("port:mcu.I2C0")).toEqual({
      type: "port",
      instance: "mcu",
      port: "I2C0",
    });
    expect(parseSubject("instance:mcu")).toEqual({
      type: "instance",
      instance: "mcu",
    });
    expect(parseSubject("rail:3V3")).toEqual({ type: "rail", rail: "3V3" });
    expect(parseSubject("edge:e1")).toEqual({ type: "edge", edge: "e1" });
  });

  test("unknown shapes fall back to the design anchor", () => {
    expect(parseSubject("wat")).toEqual({ type: "design" });
    expect(parseSubject("port:nodot")).toEqual({ type: "design" });
    expect(parseSubject("net:thing")).toEqual({ type: "design" });
  });
});

describe("badge grouping", () => {
  test("diagnostics stack on shared anchors, errors dominate", () => {
    const diags = [
      diag("W103", "warning", ["port:m.I", "port:s.I"]),
      diag("E002", "error", ["port:m.I"]),
    ];
    const badges = badgeMap(diags);
    expect(badges.get("port:m.I")?.severity).toBe("error");
    expect(badges.get("port:m.I")?.diagnostics).toHaveLength(2);
    expect(badges.get("port:s.I")?.severity).toBe("warning");
  });

  test("subject-less diagnostics cannot vanish", () => {
    const diags = [diag("E999", "error", [])];
    const badges = badgeMap(diags);
    expect(badges.get("design")?.severity).toBe("error");
    expect(allErrorsAnchored(diags, badges)).toBe(true);
  });

  test("every error is anchored somewhere", () => {
    const diags = [
      diag("E003", "error", ["port:a.IO", "port:b.IO"]),
      diag("E004", "error", ["rail:3V3"]),
      diag("W101", "warning", ["port:a.VDD"]),
    ];
    expect(allErrorsAnchored(diags, badgeMap(diags))).toBe(true);
  });
});

describe("node rollup", () => {
  test("a node inherits its worst port badge", () => {
    const badges = badgeMap([
      diag("W104", "warning", ["port:m.A0"]),
      diag("E006", "error", ["port:m.VDD"]),
      diag("W103", "warning", ["port:s.I"]),
    ]);
    expect(instanceBadgeSeverity(badges, "m")).toBe("error");
    expect(instanceBadgeSeverity(badges, "s")).toBe("warning");
    expect(instanceBadgeSeverity(badges, "ghost")).toBeNull();
  });
});
