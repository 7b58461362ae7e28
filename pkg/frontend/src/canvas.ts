/**
 * SVG rendering of the composition graph.
 *
 * Pure string-in/string-out so it can run and be tested without a DOM.
 * Nodes come from instances (positions from the layout_hint side
 * channel, defaulting to a grid), edges from signal edges, and badge
 * circles from the diagnostics of the last check.  Rails intentionally
 * do not appear here — they live in the side panel.
 */

import { Badge, instanceBadgeSeverity } from "./badges.js";
import { SummaryMap, positionOf } from "./document.js";
import { CompositionDoc, PortKind } from "./types.js";

export const NODE_WIDTH = 168;
export const PORT_ROW = 22;
export const HEADER = 30;

const GLYPHS: Record<PortKind, string> = {
  power: "⚡", // ⚡
  ground: "⏚", // ⏚
  gpio: "#",
  analog: "~",
  i2c: "I²C",
  spi: "SPI",
  uart: "UA",
};

const BADGE_FILL = { error: "#c62828", warning: "#f9a825" };

function esc(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export interface NodeGeometry {
  x: number;
  y: number;
  width: number;
  height: number;
  portAt: Map<string, { x: number; y: number }>;
}

export function nodeGeometry(
  doc: CompositionDoc,
  summaries: SummaryMap,
): Map<string, NodeGeometry> {
  const out = new Map<string, NodeGeometry>();
  doc.instances.forEach((inst, index) => {
    const summary = summaries.get(inst.block_id);
    const ports = summary?.ports ?? [];
    const fallback = {
      x: 40 + (index % 4) * (NODE_WIDTH + 60),
      y: 40 + Math.floor(index / 4) * 220,
    };
    const position = positionOf(doc, inst.instance_name) ?? fallback;
    const portAt = new Map<string, { x: number; y: number }>();
    ports.forEach((port, row) => {
      portAt.set(port.name, {
        x: position.x + NODE_WIDTH,
        y: position.y + HEADER + row * PORT_ROW + PORT_ROW / 2,
      });
    });
    out.set(inst.instance_name, {
      ...position,
      width: NODE_WIDTH,
      height: HEADER + Math.max(ports.length, 1) * PORT_ROW,
      portAt,
    });
  });
  return out;
}

export function renderCanvas(
  doc: CompositionDoc,
  summaries: SummaryMap,
  badges: Map<string, Badge>,
  selected: ReadonlySet<string> = new Set(),
): string {
  const geometry = nodeGeometry(doc, summaries);
  const pieces: string[] = [];

  for (const edge of doc.edges) {
    const [[ia, pa], [ib, pb]] = edge.endpoints;
    const from = geometry.get(ia)?.portAt.get(pa);
    const to = geometry.get(ib)?.portAt.get(pb);
    if (!from || !to) continue;
    const badge = badges.get(`edge:${edge.edge_id}`);
    const stroke = badge ? BADGE_FILL[badge.severity] : "#546e7a";
    pieces.push(
      `<line class="edge" data-edge="${esc(edge.edge_id)}" ` +
        `x1="${from.x}" y1="${from.y}" x2="${to.x}" y2="${to.y}" ` +
        `stroke="${stroke}" stroke-width="2"/>`,
    );
    if (edge.user_net_name) {
      pieces.push(
        `<text class="netname" x="${(from.x + to.x) / 2}" ` +
          `y="${(from.y + to.y) / 2 - 6}">${esc(edge.user_net_name)}</text>`,
      );
    }
  }

  for (const inst of doc.instances) {
    const geom = geometry.get(inst.instance_name);
    if (!geom) continue;
    const summary = summaries.get(inst.block_id);
    const selectedClass = selected.has(`instance:${inst.instance_name}`)
      ? " selected"
      : "";
    pieces.push(
      `<g class="node${selectedClass}" data-instance="${esc(inst.instance_name)}" ` +
        `transform="translate(${geom.x},${geom.y})">`,
    );
    pieces.push(
      `<rect width="${geom.width}" height="${geom.height}" rx="6" ` +
        `fill="#fff" stroke="#37474f"/>`,
    );
    pieces.push(
      `<text class="title" x="8" y="19">${esc(inst.instance_name)}` +
        ` <tspan class="blockid">${esc(inst.block_id)}</tspan></text>`,
    );
    (summary?.ports ?? []).forEach((port, row) => {
      const y = HEADER + row * PORT_ROW + PORT_ROW / 2 + 4;
      const portKey = `port:${inst.instance_name}.${port.name}`;
      const badge = badges.get(portKey);
      pieces.push(
        `<text class="port" data-port="${esc(portKey)}" x="8" y="${y}">` +
          `<tspan class="glyph">${esc(GLYPHS[port.kind])}</tspan> ` +
          `${esc(port.name)}${port.required ? " *" : ""}</text>`,
      );
      if (badge) {
        pieces.push(
          `<circle class="badge" data-for="${esc(portKey)}" ` +
            `cx="${geom.width - 12}" cy="${y - 4}" r="7" ` +
            `fill="${BADGE_FILL[badge.severity]}"/>`,
        );
        pieces.push(
          `<title>${esc(
            badge.diagnostics.map((d) => `${d.code}: ${d.message}`).join("\n"),
          )}</title>`,
        );
      }
    });
    const nodeSeverity = instanceBadgeSeverity(badges, inst.instance_name);
    if (nodeSeverity) {
      pieces.push(
        `<circle class="badge node-badge" cx="0" cy="0" r="8" ` +
          `fill="${BADGE_FILL[nodeSeverity]}"/>`,
      );
    }
    pieces.push("</g>");
  }

  const designBadge = badges.get("design");
  if (designBadge) {
    pieces.push(
      `<text class="design-badge" x="12" y="20" fill="${BADGE_FILL[designBadge.severity]}">` +
        `${esc(designBadge.diagnostics.map((d) => d.code).join(" "))}</text>`,
    );
  }

  return (
    `<svg xmlns="http://www.w3.org/2000/svg" class="canvas">` +
    pieces.join("") +
    `</svg>`
  );
}
