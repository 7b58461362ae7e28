/**
 * Browser bootstrap: wires the session store to the DOM.
 *
 * Everything interesting lives in the DOM-free modules; this file only
 * translates events to store calls and re-renders on change.  It is
 * compiled and type-checked but not unit-tested — the logic it fronts
 * is.
 */

import { ApiClient } from "./api.js";
import { badgeMap } from "./badges.js";
import { renderCanvas } from "./canvas.js";
import {
  EditRejection,
  addInstance,
  attachPower,
  connectSignal,
  detachPower,
} from "./document.js";
import { pickerRows, supplyChips } from "./panel.js";
import { SessionStore } from "./session.js";
import { DiagnosticJson } from "./types.js";

const SERVICE_URL =
  new URLSearchParams(location.search).get("service") ??
  "http://127.0.0.1:8733";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing #${id}`);
  return found as T;
}

function download(name: string, bytes: Uint8Array): void {
  const blob = new Blob([bytes as BlobPart], { type: "application/octet-stream" });
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = name;
  link.click();
  URL.revokeObjectURL(link.href);
}

function flash(message: string): void {
  const bar = el<HTMLElement>("statusbar");
  bar.textContent = message;
  bar.classList.add("flash");
  setTimeout(() => bar.classList.remove("flash"), 1500);
}

export async function start(): Promise<void> {
  const store = new SessionStore(new ApiClient(SERVICE_URL));
  await store.loadSummaries();

  let pendingPort: [string, string] | null = null;
  let lastAutoAttach: DiagnosticJson[] = [];

  const render = () => {
    const badges = badgeMap(store.diagnostics);
    el("canvas-host").innerHTML = renderCanvas(
      store.doc,
      store.summaries,
      badges,
      store.selectedSubjects,
    );

    const palette = el("palette");
    palette.innerHTML = "";
    for (const [blockId, summary] of store.summaries) {
      const button = document.createElement("button");
      button.textContent = `${blockId} ${summary.version}`;
      button.onclick = () => {
        const name = prompt(`instance name for ${blockId}?`);
        if (!name) return;
        try {
          store.apply((doc) => addInstance(doc, summary, name));
        } catch (err) {
          if (err instanceof EditRejection) flash(`${err.code}: ${err.message}`);
          else throw err;
        }
      };
      palette.appendChild(button);
    }

    const rails = el("rails-panel");
    rails.innerHTML = "";
    for (const chip of supplyChips(store.doc, store.summaries)) {
      const row = document.createElement("div");
      row.className = `chip ${chip.kind}${chip.attachedTo ? "" : " floating"}`;
      row.textContent =
        `${chip.instance}.${chip.port}` +
        (chip.required ? " *" : "") +
        " → " +
        (chip.attachedTo ?? "–");
      row.onclick = () => {
        const rail = prompt(
          `rail for ${chip.instance}.${chip.port}?`,
          chip.attachedTo ?? "",
        );
        try {
          if (rail) {
            store.apply((doc) =>
              attachPower(doc, chip.instance, chip.port, rail),
            );
          } else if (chip.attachedTo) {
            store.apply((doc) => detachPower(doc, chip.instance, chip.port));
          }
        } catch (err) {
          if (err instanceof EditRejection) flash(`${err.code}: ${err.message}`);
          else throw err;
        }
      };
      rails.appendChild(row);
    }
    for (const row of pickerRows(store.doc, lastAutoAttach)) {
      const div = document.createElement("div");
      div.className = "picker";
      div.textContent = `${row.instance}.${row.port}: ${row.message}`;
      rails.appendChild(div);
    }

    const list = el("diagnostic-list");
    list.innerHTML = "";
    for (const diag of store.diagnostics) {
      const item = document.createElement("li");
      item.className = diag.severity;
      item.textContent = `${diag.code} [${diag.subjects.join(", ")}] ${diag.message}`;
      item.onclick = () => store.select(diag.subjects);
      list.appendChild(item);
    }
    el("statusbar").dataset["fresh"] = String(store.diagnosticsCurrent);
  };

  store.subscribe(render);

  el("canvas-host").addEventListener("click", (event) => {
    const target = event.target as Element;
    const portKey = target.getAttribute("data-port");
    if (!portKey) return;
    const [instance = "", port = ""] = portKey.slice("port:".length).split(".");
    if (!pendingPort) {
      pendingPort = [instance, port];
      flash(`connecting from ${instance}.${port}…`);
      return;
    }
    const from = pendingPort;
    pendingPort = null;
    try {
      store.apply(
        (doc) => connectSignal(doc, store.summaries, from, [instance, port]).doc,
      );
    } catch (err) {
      if (err instanceof EditRejection) flash(`${err.code}: ${err.message}`);
      else throw err;
    }
  });

  el<HTMLButtonElement>("autoattach").onclick = async () => {
    lastAutoAttach = await store.autoAttach();
  };

  el<HTMLButtonElement>("merge").onclick = async () => {
    const outcome = await store.mergeAndDownload();
    if (outcome.ok) {
      for (const file of outcome.files) download(file.name, file.bytes);
    } else if (outcome.blockedBy) {
      alert(
        `merge refused by: ${outcome.blockedBy.join(", ")}\n\n` +
          outcome.diagnostics
            .map((d) => `${d.code} [${d.subjects.join(", ")}]: ${d.message}`)
            .join("\n"),
      );
    } else {
      alert(`request rejected (${outcome.status})`);
    }
  };

  el<HTMLInputElement>("import").onchange = async (event) => {
    const input = event.target as HTMLInputElement;
    const file = input.files?.[0];
    if (file) store.importFile(await file.text(), file.name.replace(/\.mat\.json$/, ""));
  };

  el<HTMLButtonElement>("export").onclick = () => {
    download(
      `${store.doc.name}.mat.json`,
      new TextEncoder().encode(store.exportFile()),
    );
  };

  render();
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  void start();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", () => void start());
}
