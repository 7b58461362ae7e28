/**
 * Wire shapes, verbatim.
 *
 * These mirror the JSON the check service speaks and the `*.mat.json`
 * files it accepts — the editor has no model of its own beyond them.
 * Field names are snake_case because the bytes on the wire are the
 * contract; renaming at the boundary would just add a translation layer
 * to get wrong.
 */

export type PortKind =
  | "power"
  | "ground"
  | "gpio"
  | "analog"
  | "i2c"
  | "spi"
  | "uart";

export const DATA_KINDS: ReadonlySet<PortKind> = new Set([
  "gpio",
  "analog",
  "i2c",
  "spi",
  "uart",
]);

/** One entry of GET /api/v1/blocks. */
export interface BlockSummary {
  block_id: string;
  version: string;
  ports: PortSummary[];
}

export interface PortSummary {
  name: string;
  kind: PortKind;
  role: string | null;
  required: boolean;
}

/** A composition document as stored in a `*.mat.json` file. */
export interface CompositionDoc {
  schema: number;
  name: string;
  instances: InstanceJson[];
  rails: RailJson[];
  attachments: AttachmentJson[];
  edges: EdgeJson[];
  layout_hint: LayoutHint | null;
}

export interface InstanceJson {
  instance_name: string;
  block_id: string;
  version: string;
  config_selections: Record<string, string>;
}

export interface RailJson {
  name: string;
  voltage: [number, number];
  parent: string | null;
  supply_milliamps: number | null;
}

export interface AttachmentJson {
  instance_name: string;
  port_name: string;
  rail_name: string;
}

export interface EdgeJson {
  edge_id: string;
  endpoints: [[string, string], [string, string]];
  user_net_name: string | null;
}

/**
 * Our side channel inside the document.  The service round-trips it
 * untouched; only this editor reads it.
 */
export interface LayoutHint {
  positions: Record<string, { x: number; y: number }>;
}

/** A check/resolve diagnostic as serialized by the service. */
export interface DiagnosticJson {
  code: string;
  severity: "error" | "warning";
  message: string;
  subjects: string[]; // rendered, e.g. "port:mcu.I2C0", "rail:3V3"
  explanation_key: string;
}

/** Parse findings (HTTP 400) have a different shape. */
export interface ParseDiagnosticJson {
  code: string;
  message: string;
  path: string;
}

export interface ResolveDiagnosticJson {
  code: string;
  message: string;
  subject: string;
}

export interface RailLoad {
  rail: string;
  draw_milliamps: number;
  supply_milliamps: number;
}

export interface CheckResult {
  diagnostics: DiagnosticJson[];
  rail_loads: RailLoad[];
}

export interface MergeResult {
  flat_json: string;
  bom_csv: string;
  diagnostics: DiagnosticJson[];
}

export interface AutoAttachResult {
  document: CompositionDoc;
  diagnostics: DiagnosticJson[];
}

/** Every response is {schema, ok} plus exactly one of result/diagnostics. */
export interface OkEnvelope<R> {
  schema: number;
  ok: true;
  result: R;
}

export interface FailEnvelope {
  schema: number;
  ok: false;
  diagnostics: unknown[];
}

export type Envelope<R> = OkEnvelope<R> | FailEnvelope;

export function emptyDocument(name: string): CompositionDoc {
  return {
    schema: 1,
    name,
    instances: [],
    rails: [],
    attachments: [],
    edges: [],
    layout_hint: null,
  };
}
