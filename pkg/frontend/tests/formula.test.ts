import { describe, expect, it } from "vitest";

import {
  classifyStructureKey,
  nodeCount,
  parseCanonical,
  preorderLabels,
  renderFormula,
} from "../src/formula.js";
import type { HighlightClass } from "../src/types.js";

describe("parseCanonical", () => {
  it("parses a single symbol", () => {
    const root = parseCanonical("[V!x]");
    expect(root.label).toBe("V!x");
    expect(root.children.size).toBe(0);
    expect(nodeCount(root)).toBe(1);
  });

  it("parses chains with pre-order ids", () => {
    const root = parseCanonical("[V!a[n:+[n:V!b]]]");
    expect(root.id).toBe(0);
    const plus = root.children.get("n")!;
    expect(plus.label).toBe("+");
    expect(plus.id).toBe(1);
    expect(plus.children.get("n")!.id).toBe(2);
  });

  it("parses the running example", () => {
    const canonical = "[V!\u03C0[n:=[n:N!2[n:M!()2x1[w:V!N[e:V!i]]][a:?x0]]][b:V!i]]";
    const root = parseCanonical(canonical);
    expect(nodeCount(root)).toBe(8);
    expect(preorderLabels(root)).toHaveLength(8);
  });

  it("honours escapes in labels", () => {
    const root = parseCanonical("[\\[[n:\\]]]");
    expect(root.label).toBe("[");
    expect(root.children.get("n")!.label).toBe("]");
  });

  it("rejects malformed strings", () => {
    for (const bad of ["", "[", "[]", "[V!x", "[V!x]junk", "[V!x[q:V!y]]"]) {
      expect(() => parseCanonical(bad)).toThrow();
    }
  });
});

describe("renderFormula", () => {
  it("emits one glyph per node with matching highlight classes", () => {
    const root = parseCanonical("[V!a[n:+[n:V!b]]]");
    const highlight: HighlightClass[] = ["exact", "unified", "unmatched"];
    const rendered = renderFormula(root, highlight);
    const glyphs = rendered.querySelectorAll(".sym");
    expect(glyphs).toHaveLength(3);
    expect(rendered.querySelectorAll(".sym.hl-exact")).toHaveLength(1);
    expect(rendered.querySelectorAll(".sym.hl-unified")).toHaveLength(1);
    expect(rendered.querySelectorAll(".sym.hl-unmatched")).toHaveLength(1);
    expect(glyphs[0].textContent).toBe("a");
    expect(glyphs[1].textContent).toBe("+");
  });

  it("keeps node ids aligned across visual reordering", () => {
    // below-script renders before the next-chain, but ids stay pre-order
    const root = parseCanonical("[V!x[n:=[n:N!2]][b:V!i]]");
    const rendered = renderFormula(root, ["exact", "exact", "exact", "unified"]);
    const unified = rendered.querySelector(".hl-unified")!;
    expect(unified.textContent).toBe("i");
    expect((unified as HTMLElement).dataset.nodeId).toBe("3");
  });

  it("renders every node of the running example exactly once", () => {
    const canonical = "[V!\u03C0[n:=[n:N!2[n:M!()2x1[w:V!N[e:V!i]]][a:?x0]]][b:V!i]]";
    const root = parseCanonical(canonical);
    const rendered = renderFormula(root, null);
    const ids = [...rendered.querySelectorAll(".sym")].map(
      (el) => (el as HTMLElement).dataset.nodeId,
    );
    expect(ids.slice().sort((a, b) => Number(a) - Number(b))).toEqual(
      ["0", "1", "2", "3", "4", "5", "6", "7"],
    );
  });
});

describe("classifyStructureKey", () => {
  it("labels full-exact groups", () => {
    expect(classifyStructureKey("[V!a[n:+[n:V!b]]]#eee")).toBe("exact match");
  });

  it("labels variable-only unification", () => {
    expect(classifyStructureKey("[V!a[n:+[n:V!b]]]#eeu")).toBe("variable substitution");
    expect(classifyStructureKey("[V!a[n:+[n:N!2]]]#ueu")).toBe("variable substitution");
  });

  it("labels anything else operator substitution", () => {
    expect(classifyStructureKey("[V!a[n:+[n:V!b]]]#eue")).toBe("operator substitution");
    expect(classifyStructureKey("[V!a[n:+[n:V!b]]]#ee-")).toBe("operator substitution");
  });
});
