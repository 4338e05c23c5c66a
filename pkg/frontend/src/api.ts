import type { HealthResponse, SearchResponse } from "./types.js";

export interface SearchParams {
  query: string;
  k: number;
  rerank: boolean;
}

export async function searchFormulas(params: SearchParams): Promise<SearchResponse> {
  const qs = new URLSearchParams({
    q: params.query,
    k: String(params.k),
    rerank: String(params.rerank),
  });
  const response = await fetch(`/api/search?${qs.toString()}`);
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      if (body && typeof body.error === "string") {
        detail = body.error;
      }
    } catch {
      // non-JSON error body; keep the status code
    }
    throw new Error(detail);
  }
  return (await response.json()) as SearchResponse;
}

export async function fetchHealth(): Promise<HealthResponse> {
  const response = await fetch("/api/health");
  if (!response.ok) {
    throw new Error(`health check failed: ${response.status}`);
  }
  return (await response.json()) as HealthResponse;
}
