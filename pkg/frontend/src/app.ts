// Page wiring: form, view-mode toggle, sample queries, result pane.

import { fetchHealth, searchFormulas } from "./api.js";
import { Controller, type UiState, type ViewMode } from "./state.js";
import { renderQueryPreview, renderResponse, renderStatus } from "./view.js";

export const SAMPLE_QUERIES: ReadonlyArray<{ name: string; mathml: string }> = [
  {
    name: "π_i = 2^{?x0} · binom(N, i)",
    mathml:
      "<math><msub><mi>π</mi><mi>i</mi></msub><mo>=</mo>" +
      "<msup><mn>2</mn><mi>?x0</mi></msup>" +
      "<mrow><mo>(</mo><mtable><mtr><mtd><mi>N</mi></mtd></mtr>" +
      "<mtr><mtd><mi>i</mi></mtd></mtr></mtable><mo>)</mo></mrow></math>",
  },
  {
    name: "a + b",
    mathml: "<math><mi>a</mi><mo>+</mo><mi>b</mi></math>",
  },
  {
    name: "x^2 with any exponent",
    mathml: "<math><msup><mi>x</mi><mi>?e</mi></msup></math>",
  },
  {
    name: "sqrt(x)",
    mathml: "<math><msqrt><mi>x</mi></msqrt></math>",
  },
];

interface PageElements {
  form: HTMLFormElement;
  queryInput: HTMLTextAreaElement;
  kInput: HTMLInputElement;
  rerankInput: HTMLInputElement;
  modeInputs: NodeListOf<HTMLInputElement>;
  samples: HTMLSelectElement;
  preview: HTMLElement;
  status: HTMLElement;
  results: HTMLElement;
  health: HTMLElement;
}

function findElements(root: Document): PageElements {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = root.getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el as T;
  };
  return {
    form: byId<HTMLFormElement>("search-form"),
    queryInput: byId<HTMLTextAreaElement>("query-input"),
    kInput: byId<HTMLInputElement>("k-input"),
    rerankInput: byId<HTMLInputElement>("rerank-input"),
    modeInputs: root.querySelectorAll<HTMLInputElement>("input[name=view-mode]"),
    samples: byId<HTMLSelectElement>("sample-select"),
    preview: byId("query-preview"),
    status: byId("status"),
    results: byId("results"),
    health: byId("health"),
  };
}

export function setupApp(root: Document = document, searchFn = searchFormulas): Controller {
  const els = findElements(root);

  const render = (state: UiState): void => {
    renderStatus(els.status, state);
    renderResponse(els.results, state.lastResponse, state.viewMode);
  };
  const controller = new Controller(searchFn, render);

  els.form.addEventListener("submit", (event) => {
    event.preventDefault();
    controller.setQueryText(els.queryInput.value);
    controller.setK(Number(els.kInput.value) || 100);
    controller.setRerank(els.rerankInput.checked);
    void controller.submit();
  });

  els.queryInput.addEventListener("input", () => {
    renderQueryPreview(els.preview, els.queryInput.value);
  });

  els.modeInputs.forEach((input) => {
    input.addEventListener("change", () => {
      if (input.checked) controller.setViewMode(input.value as ViewMode);
    });
  });

  for (const sample of SAMPLE_QUERIES) {
    const option = root.createElement("option");
    option.value = sample.mathml;
    option.textContent = sample.name;
    els.samples.appendChild(option);
  }
  els.samples.addEventListener("change", () => {
    if (els.samples.value) {
      els.queryInput.value = els.samples.value;
      renderQueryPreview(els.preview, els.samples.value);
    }
  });

  fetchHealth()
    .then((health) => {
      const window = health.w === null ? "all" : String(health.w);
      els.health.textContent =
        `${health.formulae} formulae indexed · window ${window} · ` +
        `EOL ${health.eol ? "on" : "off"}`;
    })
    .catch(() => {
      els.health.textContent = "API unreachable";
    });

  return controller;
}
