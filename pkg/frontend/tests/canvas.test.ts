import { describe, expect, test } from "vitest";

import { badgeMap } from "../src/badges.js";
import { nodeGeometry, renderCanvas } from "../src/canvas.js";
import { addInstance, connectSignal, setPosition } from "../src/document.js";
import { pickerRows, supplyChips } from "../src/panel.js";
import {
  BlockSummary,
  CompositionDoc,
  DiagnosticJson,
  emptyDocument,
} from "../src/types.js";

const mcu: BlockSummary = {
  block_id: "mcu",
  version: "1.0",
  ports: [
    { name: "VDD", kind: "power", role: null, required: true },
    { name: "I2C0", kind: "i2c", role: "controller", required: false },
  ],
};

const sensor: BlockSummary = {
  block_id: "sensor",
  version: "1.0",
  ports: [{ name: "I2C", kind: "i2c", role: "peripheral", required: true }],
};

const summaries = new Map([
  ["mcu", mcu],
  ["sensor", sensor],
]);

function design(): CompositionDoc {
  let doc = emptyDocument("d");
  doc = addInstance(doc, mcu, "m", { x: 50, y: 60 });
  doc = addInstance(doc, sensor, "s", { x: 400, y: 60 });
  doc = connectSignal(doc, summaries, ["m", "I2C0"], ["s", "I2C"], "BUS").doc;
  return doc;
}

function diag(
  code: string,
  severity: "error" | "warning",
  subjects: string[],
): DiagnosticJson {
  return { code, severity, subjects, message: "m", explanation_key: "k" };
}

describe("geometry", () => {
  test("layout hints direct node placement", () => {
    const geometry = nodeGeometry(design(), summaries);
    expect(geometry.get("m")).toMatchObject({ x: 50, y: 60 });
    const anchor = geometry.get("m")?.portAt.get("I2C0");
    expect(anchor?.x).toBeGreaterThan(50);
  });

  test("missing hints fall back to a grid", () => {
    let doc = emptyDocument("d");
    doc = addInstance(doc, mcu, "a");
    doc = addInstance(doc, mcu, "b");
    const geometry = nodeGeometry(doc, summaries);
    expect(geometry.get("a")?.x).not.toBe(geometry.get("b")?.x);
  });
});

describe("rendering", () => {
  test("nodes, ports, edges, and net labels appear", () => {
    const svg = renderCanvas(design(), summaries, new Map());
    expect(svg).toContain('data-instance="m"');
    expect(svg).toContain('data-port="port:m.I2C0"');
    expect(svg).toContain("VDD *"); // required marker
    expect(svg).toContain('data-edge="e1"');
    expect(svg).toContain(">BUS</text>");
  });

  test("badges colour their anchors", () => {
    const badges = badgeMap([
      diag("E002", "error", ["port:m.I2C0", "port:s.I2C"]),
    ]);
    const svg = renderCanvas(design(), summaries, badges);
    expect(svg).toContain('data-for="port:m.I2C0"');
    expect(svg).toContain("#c62828");
    expect(svg).toContain("E002: m");
  });

  test("markup is escaped", () => {
    const hostile: BlockSummary = {
      block_id: 'x"><script>',
      version: "1.0",
      ports: [{ name: "A", kind: "gpio", role: null, required: false }],
    };
    let doc = emptyDocument("d");
    doc = addInstance(doc, hostile, "h");
    const svg = renderCanvas(
      doc,
      new Map([['x"><script>', hostile]]),
      new Map(),
    );
    expect(svg).not.toContain("<script>");
    expect(svg).toContain("&lt;script&gt;");
  });
});

describe("rails panel", () => {
  test("chips show every supply port and its rail", () => {
    let doc = design();
    doc = {
      ...doc,
      rails: [
        { name: "V", voltage: [3.3, 3.3], parent: null, supply_milliamps: null },
      ],
      attachments: [
        { instance_name: "m", port_name: "VDD", rail_name: "V" },
      ],
    };
    expect(supplyChips(doc, summaries)).toEqual([
      {
        instance: "m",
        port: "VDD",
        kind: "power",
        required: true,
        attachedTo: "V",
      },
    ]);
  });

  test("picker rows come from the service's ambiguity warnings", () => {
    const doc = {
      ...design(),
      rails: [
        { name: "A", voltage: [3.3, 3.3] as [number, number], parent: null, supply_milliamps: null },
        { name: "B", voltage: [3.2, 3.2] as [number, number], parent: null, supply_milliamps: null },
      ],
    };
    const rows = pickerRows(doc, [
      diag("W101", "warning", ["port:m.VDD"]),
      diag("W103", "warning", ["port:m.I2C0"]), // not a picker concern
    ]);
    expect(rows).toEqual([
      {
        instance: "m",
        port: "VDD",
        message: "m",
        railOptions: ["A", "B"],
      },
    ]);
  });
});
