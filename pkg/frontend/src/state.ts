// UI state machine. Submissions during loading are ignored, and switching
// the view mode re-renders from the last response without a new request.

import type { SearchResponse } from "./types.js";
import type { SearchParams } from "./api.js";

export type ViewMode = "byFormula" | "byDocument";

export type Status =
  | { kind: "idle" }
  | { kind: "loading" }
  | { kind: "error"; message: string };

export interface UiState {
  queryText: string;
  k: number;
  rerank: boolean;
  viewMode: ViewMode;
  lastResponse: SearchResponse | null;
  status: Status;
}

export function initialState(): UiState {
  return {
    queryText: "",
    k: 100,
    rerank: true,
    viewMode: "byFormula",
    lastResponse: null,
    status: { kind: "idle" },
  };
}

export type SearchFn = (params: SearchParams) => Promise<SearchResponse>;

export class Controller {
  state: UiState;
  private readonly searchFn: SearchFn;
  private readonly onChange: (state: UiState) => void;

  constructor(searchFn: SearchFn, onChange: (state: UiState) => void, state?: UiState) {
    this.searchFn = searchFn;
    this.onChange = onChange;
    this.state = state ?? initialState();
  }

  private update(patch: Partial<UiState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.state);
  }

  /** Run the query; returns false when ignored (already loading / empty). */
  async submit(): Promise<boolean> {
    if (this.state.status.kind === "loading") return false;
    if (!this.state.queryText.trim()) return false;
    this.update({ status: { kind: "loading" } });
    try {
      const response = await this.searchFn({
        query: this.state.queryText,
        k: this.state.k,
        rerank: this.state.rerank,
      });
      this.update({ lastResponse: response, status: { kind: "idle" } });
      return true;
    } catch (error) {
      const message = error instanceof Error ? error.message : String(error);
      this.update({ status: { kind: "error", message } });
      return false;
    }
  }

  setQueryText(text: string): void {
    this.update({ queryText: text });
  }

  setK(k: number): void {
    this.update({ k });
  }

  setRerank(rerank: boolean): void {
    this.update({ rerank });
  }

  /** Pure view change: never issues a request. */
  setViewMode(mode: ViewMode): void {
    if (mode !== this.state.viewMode) {
      this.update({ viewMode: mode });
    }
  }
}
