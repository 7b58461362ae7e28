/**
 * Diagnostics → badge anchors.
 *
 * The service renders subjects as strings ("port:mcu.I2C0", "rail:3V3",
 * "instance:mcu", "edge:e1"); the canvas and the rails panel need them
 * split back into anchorable pieces.  Invariant kept here: every
 * error-severity diagnostic is anchored to at least one subject — a
 * subject-less error falls back to the design-wide anchor so it cannot
 * silently disappear.
 */

import { DiagnosticJson } from "./types.js";

export type Anchor =
  | { type: "port"; instance: string; port: string }
  | { type: "instance"; instance: string }
  | { type: "rail"; rail: string }
  | { type: "edge"; edge: string }
  | { type: "design" };

export function parseSubject(subject: string): Anchor {
  const colon = subject.indexOf(":");
  if (colon < 0) return { type: "design" };
  const kind = subject.slice(0, colon);
  const rest = subject.slice(colon + 1);
  switch (kind) {
    case "port": {
      const dot = rest.indexOf(".");
      if (dot < 0) return { type: "design" };
      return {
        type: "port",
        instance: rest.slice(0, dot),
        port: rest.slice(dot + 1),
      };
    }
    case "instance":
      return { type: "instance", instance: rest };
    case "rail":
      return { type: "rail", rail: rest };
    case "edge":
      return { type: "edge", edge: rest };
    default:
      return { type: "design" };
  }
}

export function anchorKey(anchor: Anchor): string {
  switch (anchor.type) {
    case "port":
      return `port:${anchor.instance}.${anchor.port}`;
    case "instance":
      return `instance:${anchor.instance}`;
    case "rail":
      return `rail:${anchor.rail}`;
    case "edge":
      return `edge:${anchor.edge}`;
    case "design":
      return "design";
  }
}

export interface Badge {
  anchor: Anchor;
  severity: "error" | "warning";
  diagnostics: DiagnosticJson[];
}

/** Group diagnostics by anchor; errors dominate the badge severity. */
export function badgeMap(diagnostics: DiagnosticJson[]): Map<string, Badge> {
  const out = new Map<string, Badge>();
  for (const diag of diagnostics) {
    const anchors = diag.subjects.length
      ? diag.subjects.map(parseSubject)
      : [{ type: "design" } as Anchor];
    for (const anchor of anchors) {
      const key = anchorKey(anchor);
      const existing = out.get(key);
      if (existing) {
        existing.diagnostics.push(diag);
        if (diag.severity === "error") existing.severity = "error";
      } else {
        out.set(key, { anchor, severity: diag.severity, diagnostics: [diag] });
      }
    }
  }
  return out;
}

/** The node-level badge for an instance aggregates its ports' badges. */
export function instanceBadgeSeverity(
  badges: Map<string, Badge>,
  instance: string,
): "error" | "warning" | null {
  let worst: "error" | "warning" | null = null;
  for (const badge of badges.values()) {
    const a = badge.anchor;
    const mine =
      (a.type === "instance" && a.instance === instance) ||
      (a.type === "port" && a.instance === instance);
    if (!mine) continue;
    if (badge.severity === "error") return "error";
    worst = "warning";
  }
  return worst;
}

/** Sanity helper used by tests: no error may lack an anchor. */
export function allErrorsAnchored(
  diagnostics: DiagnosticJson[],
  badges: Map<string, Badge>,
): boolean {
  return diagnostics
    .filter((d) => d.severity === "error")
    .every((d) =>
      [...badges.values()].some(
        (b) => b.severity === "error" && b.diagnostics.includes(d),
      ),
    );
}
