// Response rendering. Hits appear strictly in server order; the view mode
// only chooses which server-provided list is shown.

import { classifyStructureKey, parseCanonical, renderFormula } from "./formula.js";
import type { UiState } from "./state.js";
import type { DocumentHit, FormulaHit, ResultGroup, SearchResponse } from "./types.js";

export function renderStatus(target: HTMLElement, state: UiState): void {
  target.innerHTML = "";
  if (state.status.kind === "loading") {
    target.textContent = "Searching…";
    target.className = "status loading";
  } else if (state.status.kind === "error") {
    target.textContent = `Search failed: ${state.status.message}`;
    target.className = "status error";
  } else if (state.lastResponse) {
    const { coreMs, rerankMs } = state.lastResponse.timingMs;
    target.textContent = `core ${coreMs.toFixed(1)} ms · re-rank ${rerankMs.toFixed(1)} ms`;
    target.className = "status timing";
  } else {
    target.textContent = "";
    target.className = "status";
  }
}

export function renderResponse(target: HTMLElement, response: SearchResponse | null, mode: "byFormula" | "byDocument"): void {
  target.innerHTML = "";
  if (!response) return;
  if (mode === "byDocument") {
    target.appendChild(renderDocumentList(response.documents));
  } else {
    for (const group of response.groups) {
      target.appendChild(renderGroup(group));
    }
    if (response.groups.length === 0) {
      const empty = document.createElement("p");
      empty.className = "empty";
      empty.textContent = "No matching formulae.";
      target.appendChild(empty);
    }
  }
}

function renderGroup(group: ResultGroup): HTMLElement {
  const section = document.createElement("section");
  section.className = "group";
  const header = document.createElement("header");
  const kind = document.createElement("span");
  kind.className = "group-kind";
  kind.textContent = classifyStructureKey(group.structureKey);
  header.appendChild(kind);
  const best = group.hits[0];
  if (best && best.triple) {
    const badge = document.createElement("span");
    badge.className = "group-score";
    badge.textContent = `(${best.triple.h.toFixed(3)}, ${best.triple.negUnmatched}, ${best.triple.exact})`;
    header.appendChild(badge);
  }
  section.appendChild(header);
  const list = document.createElement("ol");
  list.className = "hits";
  for (const hit of group.hits) {
    list.appendChild(renderHit(hit));
  }
  section.appendChild(list);
  return section;
}

export function renderHit(hit: FormulaHit): HTMLElement {
  const item = document.createElement("li");
  item.className = "hit";
  try {
    const tree = parseCanonical(hit.canonical);
    item.appendChild(renderFormula(tree, hit.highlight));
  } catch {
    const fallback = document.createElement("code");
    fallback.textContent = hit.canonical;
    item.appendChild(fallback);
  }
  const meta = document.createElement("span");
  meta.className = "hit-meta";
  const dice = `dice ${hit.diceScore.toFixed(3)}`;
  const docs = hit.docs.map((doc) => `${doc.docName}@${doc.position}`).join(", ");
  meta.textContent = ` ${dice} · ${docs}`;
  item.appendChild(meta);
  return item;
}

function renderDocumentList(documents: DocumentHit[]): HTMLElement {
  const list = document.createElement("ol");
  list.className = "documents";
  for (const doc of documents) {
    const item = document.createElement("li");
    item.className = "doc";
    const name = document.createElement("span");
    name.className = "doc-name";
    name.textContent = doc.docName;
    item.appendChild(name);
    const meta = document.createElement("span");
    meta.className = "doc-meta";
    const score = doc.bestTriple
      ? `best (${doc.bestTriple.h.toFixed(3)}, ${doc.bestTriple.negUnmatched}, ${doc.bestTriple.exact})`
      : "";
    meta.textContent = ` ${score} · ${doc.hitCount} hit${doc.hitCount === 1 ? "" : "s"}`;
    item.appendChild(meta);
    list.appendChild(item);
  }
  if (documents.length === 0) {
    const empty = document.createElement("li");
    empty.className = "empty";
    empty.textContent = "No matching documents.";
    list.appendChild(empty);
  }
  return list;
}

/** Native MathML preview of the query the user typed. */
export function renderQueryPreview(target: HTMLElement, mathml: string): void {
  target.innerHTML = "";
  if (!mathml.trim()) return;
  try {
    const doc = new DOMParser().parseFromString(mathml, "application/xml");
    if (doc.querySelector("parsererror")) throw new Error("invalid XML");
    target.appendChild(document.importNode(doc.documentElement, true));
  } catch {
    const fallback = document.createElement("code");
    fallback.textContent = mathml;
    target.appendChild(fallback);
  }
}
