/**
 * Thin client for the check service.  The editor talks to nothing else.
 *
 * Outcomes carry the HTTP status because the service encodes the failure
 * stage in it: 400 parse, 422 resolve, 409 merge refused.  Anything else
 * non-2xx is a transport-level surprise and surfaces as a thrown error.
 */

import {
  AutoAttachResult,
  BlockSummary,
  CheckResult,
  CompositionDoc,
  Envelope,
  MergeResult,
} from "./types.js";

export type ApiOutcome<R> =
  | { ok: true; result: R }
  | { ok: false; status: number; diagnostics: unknown[] };

export interface CheckApi {
  blocks(): Promise<BlockSummary[]>;
  check(doc: CompositionDoc, signal?: AbortSignal): Promise<ApiOutcome<CheckResult>>;
  merge(doc: CompositionDoc, signal?: AbortSignal): Promise<ApiOutcome<MergeResult>>;
  autoattach(
    doc: CompositionDoc,
    signal?: AbortSignal,
  ): Promise<ApiOutcome<AutoAttachResult>>;
}

const KNOWN_FAILURES = new Set([400, 409, 422]);

export class ApiClient implements CheckApi {
  constructor(private readonly baseUrl: string) {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, "")}/api/v1/${path}`;
  }

  async blocks(): Promise<BlockSummary[]> {
    const response = await fetch(this.url("blocks"));
    if (!response.ok) {
      throw new Error(`GET /blocks failed: ${response.status}`);
    }
    const body = (await response.json()) as Envelope<BlockSummary[]>;
    if (!body.ok) throw new Error("GET /blocks returned a failure envelope");
    return body.result;
  }

  private async post<R>(
    path: string,
    doc: CompositionDoc,
    signal?: AbortSignal,
  ): Promise<ApiOutcome<R>> {
    const response = await fetch(this.url(path), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
      signal,
    });
    if (!response.ok && !KNOWN_FAILURES.has(response.status)) {
      throw new Error(`POST /${path} failed: ${response.status}`);
    }
    const body = (await response.json()) as Envelope<R>;
    if (body.ok) return { ok: true, result: body.result };
    return { ok: false, status: response.status, diagnostics: body.diagnostics };
  }

  check(doc: CompositionDoc, signal?: AbortSignal) {
    return this.post<CheckResult>("check", doc, signal);
  }

  merge(doc: CompositionDoc, signal?: AbortSignal) {
    return this.post<MergeResult>("merge", doc, signal);
  }

  autoattach(doc: CompositionDoc, signal?: AbortSignal) {
    return this.post<AutoAttachResult>("autoattach", doc, signal);
  }
}
