// JSON shapes returned by the search API.

export interface ScoreTriple {
  h: number;
  negUnmatched: number;
  exact: number;
}

export interface DocRef {
  docName: string;
  position: number;
}

export type HighlightClass = "exact" | "unified" | "unmatched";

export interface FormulaHit {
  formId: number;
  canonical: string;
  diceScore: number;
  triple: ScoreTriple | null;
  highlight: HighlightClass[] | null;
  docs: DocRef[];
}

export interface ResultGroup {
  structureKey: string;
  hits: FormulaHit[];
}

export interface DocumentHit {
  docName: string;
  bestTriple: ScoreTriple | null;
  hitCount: number;
}

export interface SearchResponse {
  query: string;
  timingMs: { coreMs: number; rerankMs: number };
  groups: ResultGroup[];
  documents: DocumentHit[];
}

export interface HealthResponse {
  status: string;
  formulae: number;
  w: number | null;
  eol: boolean;
}
