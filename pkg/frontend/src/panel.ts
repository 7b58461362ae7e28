/**
 * Rails side panel model: supply ports as attachment chips.
 *
 * Power routing is deliberately not drawn on the canvas — each
 * power/ground port gets a chip showing its rail (or lack of one), and
 * the auto-attach button fills in whatever is unambiguous.  Ports the
 * service flags with W101 become picker rows; the pick itself is a plain
 * manual attachment, so the editor never re-derives candidate rails.
 */

import { parseSubject } from "./badges.js";
import { SummaryMap } from "./document.js";
import { CompositionDoc, DiagnosticJson } from "./types.js";

export interface SupplyChip {
  instance: string;
  port: string;
  kind: "power" | "ground";
  required: boolean;
  attachedTo: string | null;
}

export function supplyChips(
  doc: CompositionDoc,
  summaries: SummaryMap,
): SupplyChip[] {
  const attached = new Map(
    doc.attachments.map((a) => [
      `${a.instance_name}.${a.port_name}`,
      a.rail_name,
    ]),
  );
  const chips: SupplyChip[] = [];
  for (const inst of doc.instances) {
    const summary = summaries.get(inst.block_id);
    for (const port of summary?.ports ?? []) {
      if (port.kind !== "power" && port.kind !== "ground") continue;
      chips.push({
        instance: inst.instance_name,
        port: port.name,
        kind: port.kind,
        required: port.required,
        attachedTo:
          attached.get(`${inst.instance_name}.${port.name}`) ?? null,
      });
    }
  }
  return chips;
}

export interface PickerRow {
  instance: string;
  port: string;
  /** The service's own wording, which names the candidate rails. */
  message: string;
  /** Everything attachable; the user's pick becomes a manual attachment. */
  railOptions: string[];
}

/** Rows for ports auto-attach could not decide (W101) or satisfy (W102). */
export function pickerRows(
  doc: CompositionDoc,
  diagnostics: DiagnosticJson[],
): PickerRow[] {
  const rows: PickerRow[] = [];
  for (const diag of diagnostics) {
    if (diag.code !== "W101" && diag.code !== "W102") continue;
    for (const subject of diag.subjects) {
      const anchor = parseSubject(subject);
      if (anchor.type !== "port") continue;
      rows.push({
        instance: anchor.instance,
        port: anchor.port,
        message: diag.message,
        railOptions: doc.rails.map((r) => r.name),
      });
    }
  }
  return rows;
}
