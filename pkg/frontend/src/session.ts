/**
 * Single-document session: the editor's only mutable state.
 *
 * Every edit bumps `revision` and schedules a re-check 150 ms out; edits
 * arriving inside the window coalesce into one request.  At most one
 * check is in flight — starting a new one aborts the old request and its
 * late response is discarded (latest wins).  `diagnostics` is always
 * tagged with the revision it was computed for, so views can tell "stale
 * but shown" from "current".
 */

import { ApiOutcome, CheckApi } from "./api.js";
import { loadDocument, saveDocument, SummaryMap } from "./document.js";
import {
  BlockSummary,
  CheckResult,
  CompositionDoc,
  DiagnosticJson,
  MergeResult,
  RailLoad,
  emptyDocument,
} from "./types.js";

export const DEBOUNCE_MS = 150;

export type CheckState =
  | { phase: "idle" }
  | { phase: "pending" } // debounce window open
  | { phase: "checking" }
  | { phase: "checked"; forRevision: number }
  | { phase: "rejected"; status: number; findings: unknown[] };

export interface DownloadFile {
  name: string;
  bytes: Uint8Array;
}

export type MergeOutcome =
  | { ok: true; files: DownloadFile[] }
  | { ok: false; blockedBy: string[]; diagnostics: DiagnosticJson[] }
  | { ok: false; blockedBy: null; status: number; findings: unknown[] };

export class SessionStore {
  doc: CompositionDoc;
  revision = 0;
  dirty = false;
  summaries: SummaryMap = new Map();
  diagnostics: DiagnosticJson[] = [];
  diagnosticsRevision = -1;
  railLoads: RailLoad[] = [];
  checkState: CheckState = { phase: "idle" };
  selectedSubjects = new Set<string>();

  private listeners = new Set<() => void>();
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight: AbortController | null = null;
  private checkSeq = 0;

  constructor(
    private readonly api: CheckApi,
    private readonly debounceMs: number = DEBOUNCE_MS,
  ) {
    this.doc = emptyDocument("untitled");
  }

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  async loadSummaries(): Promise<void> {
    const list = await this.api.blocks();
    this.summaries = new Map(list.map((b: BlockSummary) => [b.block_id, b]));
    this.notify();
  }

  /** Apply a pure document edit and schedule a re-check. */
  apply(edit: (doc: CompositionDoc) => CompositionDoc): void {
    this.doc = edit(this.doc);
    this.revision += 1;
    this.dirty = true;
    this.schedule();
    this.notify();
  }

  select(subjects: Iterable<string>): void {
    this.selectedSubjects = new Set(subjects);
    this.notify();
  }

  private schedule(): void {
    if (this.timer !== null) clearTimeout(this.timer);
    this.checkState = { phase: "pending" };
    this.timer = setTimeout(() => {
      this.timer = null;
      void this.runCheck();
    }, this.debounceMs);
  }

  /** Skip the debounce window (file load, explicit re-check button). */
  checkNow(): Promise<void> {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    return this.runCheck();
  }

  private async runCheck(): Promise<void> {
    const seq = ++this.checkSeq;
    const revision = this.revision;
    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    this.checkState = { phase: "checking" };
    this.notify();

    let outcome: ApiOutcome<CheckResult>;
    try {
      outcome = await this.api.check(this.doc, controller.signal);
    } catch (err) {
      if (seq !== this.checkSeq) return; // superseded; aborts land here
      throw err;
    }
    if (seq !== this.checkSeq) return; // a newer check owns the state

    if (outcome.ok) {
      this.diagnostics = outcome.result.diagnostics;
      this.diagnosticsRevision = revision;
      this.railLoads = outcome.result.rail_loads;
      this.checkState = { phase: "checked", forRevision: revision };
    } else {
      this.checkState = {
        phase: "rejected",
        status: outcome.status,
        findings: outcome.diagnostics,
      };
    }
    this.notify();
  }

  /** Diagnostics match the document the user is looking at. */
  get diagnosticsCurrent(): boolean {
    return this.diagnosticsRevision === this.revision;
  }

  async autoAttach(): Promise<DiagnosticJson[]> {
    const outcome = await this.api.autoattach(this.doc);
    if (!outcome.ok) {
      this.checkState = {
        phase: "rejected",
        status: outcome.status,
        findings: outcome.diagnostics,
      };
      this.notify();
      return [];
    }
    this.doc = outcome.result.document;
    this.revision += 1;
    this.dirty = true;
    this.schedule();
    this.notify();
    return outcome.result.diagnostics;
  }

  async mergeAndDownload(): Promise<MergeOutcome> {
    const outcome: ApiOutcome<MergeResult> = await this.api.merge(this.doc);
    if (outcome.ok) {
      const encoder = new TextEncoder();
      return {
        ok: true,
        files: [
          {
            name: `${this.doc.name}.flat.json`,
            bytes: encoder.encode(outcome.result.flat_json),
          },
          {
            name: `${this.doc.name}.bom.csv`,
            bytes: encoder.encode(outcome.result.bom_csv),
          },
        ],
      };
    }
    if (outcome.status === 409) {
      const diags = outcome.diagnostics as DiagnosticJson[];
      return {
        ok: false,
        blockedBy: [...new Set(diags.map((d) => d.code))].sort(),
        diagnostics: diags,
      };
    }
    return {
      ok: false,
      blockedBy: null,
      status: outcome.status,
      findings: outcome.diagnostics,
    };
  }

  importFile(text: string, name?: string): void {
    this.doc = loadDocument(text);
    if (name) this.doc = { ...this.doc, name };
    this.revision += 1;
    this.dirty = false;
    this.diagnostics = [];
    this.diagnosticsRevision = -1;
    this.schedule();
    this.notify();
  }

  exportFile(): string {
    this.dirty = false;
    return saveDocument(this.doc);
  }
}
