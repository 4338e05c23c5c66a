// Canonical formula strings ("[V!a[n:+[n:V!b]]]") parsed into layout trees
// and rendered as DOM with one glyph element per node, so highlight classes
// line up with the server's per-node payload (pre-order indexing).

import type { HighlightClass } from "./types.js";

export interface SltNode {
  id: number; // pre-order position, matches the highlight array
  label: string;
  children: Map<string, SltNode>; // edge character -> child
}

const EDGE_CHARS = "nwebaAB";

export function parseCanonical(text: string): SltNode {
  let pos = 0;
  let nextId = 0;
  const open: SltNode[] = [];
  let root: SltNode | null = null;

  const fail = (message: string): never => {
    throw new Error(`bad canonical string at ${pos}: ${message}`);
  };

  while (pos < text.length) {
    const ch = text[pos];
    if (ch === "[") {
      pos += 1;
      let edge = "";
      if (open.length > 0) {
        if (pos + 1 >= text.length || text[pos + 1] !== ":") fail("expected edge prefix");
        edge = text[pos];
        if (!EDGE_CHARS.includes(edge)) fail(`unknown edge '${edge}'`);
        pos += 2;
      } else if (root !== null) {
        fail("multiple roots");
      }
      let label = "";
      while (pos < text.length && text[pos] !== "[" && text[pos] !== "]") {
        if (text[pos] === "\\") {
          pos += 1;
          if (pos >= text.length) fail("dangling escape");
        }
        label += text[pos];
        pos += 1;
      }
      if (!label) fail("empty label");
      const node: SltNode = { id: nextId++, label, children: new Map() };
      if (open.length > 0) {
        open[open.length - 1].children.set(edge, node);
      } else {
        root = node;
      }
      open.push(node);
    } else if (ch === "]") {
      if (open.length === 0) fail("unbalanced ']'");
      open.pop();
      pos += 1;
    } else {
      fail(`unexpected '${ch}'`);
    }
  }
  if (open.length > 0 || root === null) {
    throw new Error("bad canonical string: unterminated tree");
  }
  return root;
}

export function nodeCount(root: SltNode): number {
  let count = 0;
  const stack = [root];
  while (stack.length > 0) {
    const node = stack.pop()!;
    count += 1;
    node.children.forEach((child) => stack.push(child));
  }
  return count;
}

const MATRIX_LABEL = /^M!(.*?)(\d+)x(\d+)$/;

function displayText(label: string): string {
  if (label.length >= 2 && label[1] === "!" && "VNT".includes(label[0])) {
    return label.slice(2);
  }
  return label;
}

/** Render a formula tree inline; one `.sym` span per node carries the
 * node's highlight class, keyed by pre-order id. */
export function renderFormula(root: SltNode, highlight: HighlightClass[] | null): HTMLElement {
  const container = document.createElement("span");
  container.className = "formula";
  renderInto(container, root, highlight);
  return container;
}

function glyph(target: HTMLElement, node: SltNode, highlight: HighlightClass[] | null, text: string): void {
  const span = document.createElement("span");
  span.textContent = text;
  span.dataset.nodeId = String(node.id);
  span.className = "sym" + (highlight ? ` hl-${highlight[node.id] ?? "unmatched"}` : "");
  target.appendChild(span);
}

function plain(target: HTMLElement, text: string): void {
  const span = document.createElement("span");
  span.className = "decor";
  span.textContent = text;
  target.appendChild(span);
}

function script(target: HTMLElement, tag: "sub" | "sup", child: SltNode | undefined, highlight: HighlightClass[] | null): void {
  if (!child) return;
  const wrapper = document.createElement(tag);
  renderInto(wrapper, child, highlight);
  target.appendChild(wrapper);
}

function renderInto(target: HTMLElement, node: SltNode, highlight: HighlightClass[] | null): void {
  const kids = node.children;
  script(target, "sub", kids.get("B"), highlight);
  script(target, "sup", kids.get("A"), highlight);

  const matrix = MATRIX_LABEL.exec(node.label);
  if (node.label === "F!") {
    // fraction: above/below stacked around the node's own bar glyph
    const frac = document.createElement("span");
    frac.className = "frac";
    const above = kids.get("a");
    if (above) {
      const numerator = document.createElement("span");
      numerator.className = "frac-part";
      renderInto(numerator, above, highlight);
      frac.appendChild(numerator);
    }
    glyph(frac, node, highlight, "⁄");
    const below = kids.get("b");
    if (below) {
      const denominator = document.createElement("span");
      denominator.className = "frac-part";
      renderInto(denominator, below, highlight);
      frac.appendChild(denominator);
    }
    target.appendChild(frac);
  } else if (node.label === "R!") {
    glyph(target, node, highlight, "√");
    script(target, "sup", kids.get("a"), highlight);
    const radicand = kids.get("w");
    if (radicand) {
      plain(target, "(");
      renderInto(target, radicand, highlight);
      plain(target, ")");
    }
  } else if (matrix) {
    const fences = matrix[1];
    const openFence = fences.length > 0 ? fences[0] : "[";
    const closeFence = fences.length > 1 ? fences[fences.length - 1] : fences.length === 1 ? fences[0] : "]";
    glyph(target, node, highlight, openFence);
    const first = kids.get("w");
    if (first) renderInto(target, first, highlight);
    plain(target, closeFence);
    script(target, "sup", kids.get("a"), highlight);
    script(target, "sub", kids.get("b"), highlight);
  } else {
    glyph(target, node, highlight, displayText(node.label));
    script(target, "sup", kids.get("a"), highlight);
    script(target, "sub", kids.get("b"), highlight);
    const within = kids.get("w");
    if (within) {
      plain(target, "(");
      renderInto(target, within, highlight);
      plain(target, ")");
    }
  }

  const next = kids.get("n");
  if (next) renderInto(target, next, highlight);
  const element = kids.get("e");
  if (element) {
    plain(target, ", ");
    renderInto(target, element, highlight);
  }
}

export type GroupKind = "exact match" | "variable substitution" | "operator substitution";

/** Classify a structure key ("<canonical>#<flags>") for the group header. */
export function classifyStructureKey(structureKey: string): GroupKind {
  const separator = structureKey.lastIndexOf("#");
  if (separator < 0) return "operator substitution";
  const canonical = structureKey.slice(0, separator);
  const flags = structureKey.slice(separator + 1);
  if (/^e+$/.test(flags)) return "exact match";
  let labels: string[];
  try {
    labels = preorderLabels(parseCanonical(canonical));
  } catch {
    return "operator substitution";
  }
  let sawUnified = false;
  for (let i = 0; i < flags.length; i += 1) {
    const flag = flags[i];
    if (flag === "e") continue;
    const label = labels[i] ?? "";
    const substitutable =
      label.startsWith("V!") || label.startsWith("N!") || label.startsWith("?");
    if (flag === "u" && substitutable) {
      sawUnified = true;
      continue;
    }
    return "operator substitution";
  }
  return sawUnified ? "variable substitution" : "operator substitution";
}

export function preorderLabels(root: SltNode): string[] {
  const labels: string[] = [];
  const visit = (node: SltNode): void => {
    labels[node.id] = node.label;
    node.children.forEach(visit);
  };
  visit(root);
  return labels;
}
