/** Shared test doubles: canned HTTP responses, a recording fetch stub, and
 * small payload factories matching the service's JSON shapes.
 */

import type {
  FetchLike,
  PlanResponse,
  RecordPayload,
  SearchResponse,
  SearchResultPayload,
} from "../src/api.js";

export function jsonRes(body: unknown, status = 200): Response {
  const text = JSON.stringify(body);
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => JSON.parse(text) as unknown,
    text: async () => text,
  } as unknown as Response;
}

export function textRes(text: string, status = 200): Response {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => JSON.parse(text) as unknown,
    text: async () => text,
  } as unknown as Response;
}

export interface Call {
  url: string;
  init?: RequestInit;
}

export class FakeServer {
  calls: Call[] = [];
  handler: (url: string, init?: RequestInit) => Response | Promise<Response> = () =>
    jsonRes({ code: "error", message: "no handler installed" }, 500);

  readonly fetch: FetchLike = async (url, init) => {
    this.calls.push({ url, init });
    return this.handler(url, init);
  };

  lastCall(): Call {
    const call = this.calls[this.calls.length - 1];
    if (!call) throw new Error("no calls recorded");
    return call;
  }
}

export function makeRecord(id: string, overrides: Partial<RecordPayload> = {}): RecordPayload {
  return {
    record_id: id,
    timestamp: 1_700_000_000,
    title: `Title of ${id}`,
    body: [["Beschreibung", `Body text of ${id}`]],
    attributes: [],
    ...overrides,
  };
}

export function makeResult(
  id: string,
  rank: number,
  overrides: Partial<SearchResultPayload> = {},
): SearchResultPayload {
  return { ...makeRecord(id), rank, score: 0.5, doc_sim: 0.4, term_sim: 0.7, ...overrides };
}

export function searchResponse(
  results: SearchResultPayload[],
  overrides: Partial<SearchResponse> = {},
): SearchResponse {
  return {
    query: "Pumpe",
    method: "semantic",
    expansion: true,
    sort: "relevance",
    count: results.length,
    results,
    ...overrides,
  };
}

export function makePlan(
  assessorId: string,
  queries: { query_id: string; text: string; records: RecordPayload[] }[],
): PlanResponse {
  return { assessor_id: assessorId, assessment_method: "semantic", queries };
}

export function submitForm(form: HTMLFormElement): void {
  form.dispatchEvent(new Event("submit", { bubbles: true, cancelable: true }));
}

export function changeValue(element: HTMLSelectElement | HTMLInputElement, value: string): void {
  element.value = value;
  element.dispatchEvent(new Event("change", { bubbles: true }));
}
