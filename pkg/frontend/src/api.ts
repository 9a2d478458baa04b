/** Typed client for the shiftsearch HTTP API.
 *
 * The fetch implementation is injectable so unit tests can stub the network
 * and the end-to-end suite can talk to a live server through an absolute base
 * URL. Error responses carry a {code, message} JSON body and surface as
 * ApiHttpError; anything else (connection refused, DNS) propagates as the
 * underlying fetch rejection.
 */

export type Level = "term" | "phrase";
export const LEVELS: readonly Level[] = ["term", "phrase"];

export interface RecordPayload {
  record_id: string;
  timestamp: number;
  title: string;
  body: [string, string][];
  attributes: string[];
}

export interface SearchResultPayload extends RecordPayload {
  rank: number;
  score?: number;
  doc_sim?: number;
  term_sim?: number;
}

export interface SearchResponse {
  query: string;
  method: string;
  expansion: boolean;
  sort: string;
  count: number;
  results: SearchResultPayload[];
}

export interface PlanQuery {
  query_id: string;
  text: string;
  records: RecordPayload[];
}

export interface PlanResponse {
  assessor_id: string;
  assessment_method: string;
  queries: PlanQuery[];
}

export interface FeedbackBody {
  assessor_id: string;
  query_id: string;
  record_id: string;
  level: Level;
  relevant: boolean;
}

export interface FeedbackEventPayload extends FeedbackBody {
  timestamp: number;
}

export interface FeedbackAck {
  status: string;
  plan_id: string;
  event: FeedbackEventPayload;
}

export interface HealthPayload {
  status: string;
  doc_count: number;
  dim: number;
}

export interface SearchOptions {
  method?: string;
  sort?: string;
  expansion?: boolean;
  limit?: number;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiHttpError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiHttpError";
  }
}

async function raiseHttpError(res: Response): Promise<never> {
  let code = "error";
  let message = `request failed with status ${res.status}`;
  try {
    const body: unknown = await res.json();
    if (body && typeof body === "object") {
      const envelope = body as { code?: unknown; message?: unknown };
      if (typeof envelope.code === "string") code = envelope.code;
      if (typeof envelope.message === "string") message = envelope.message;
    }
  } catch {
    // non-JSON error body, keep the defaults
  }
  throw new ApiHttpError(res.status, code, message);
}

export class ApiClient {
  constructor(
    readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const res = await this.fetchFn(this.base + path);
    if (!res.ok) await raiseHttpError(res);
    return res.json() as Promise<T>;
  }

  private async getText(path: string): Promise<string> {
    const res = await this.fetchFn(this.base + path);
    if (!res.ok) await raiseHttpError(res);
    return res.text();
  }

  search(query: string, options: SearchOptions = {}): Promise<SearchResponse> {
    const params = new URLSearchParams({ q: query });
    if (options.method !== undefined) params.set("method", options.method);
    if (options.sort !== undefined) params.set("sort", options.sort);
    if (options.expansion !== undefined) {
      params.set("expansion", options.expansion ? "on" : "off");
    }
    if (options.limit !== undefined) params.set("limit", String(options.limit));
    return this.getJson(`/api/search?${params.toString()}`);
  }

  record(recordId: string): Promise<RecordPayload> {
    return this.getJson(`/api/records/${encodeURIComponent(recordId)}`);
  }

  plan(assessorId: string): Promise<PlanResponse> {
    return this.getJson(`/api/plan/${encodeURIComponent(assessorId)}`);
  }

  async sendFeedback(body: FeedbackBody): Promise<FeedbackAck> {
    const res = await this.fetchFn(`${this.base}/api/feedback`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) await raiseHttpError(res);
    return res.json() as Promise<FeedbackAck>;
  }

  /** Deduplicated judgment log, one JSON event per non-empty line. */
  async exportFeedback(): Promise<FeedbackEventPayload[]> {
    const text = await this.getText("/api/export/feedback");
    return text
      .split("\n")
      .filter((line) => line.trim() !== "")
      .map((line) => JSON.parse(line) as FeedbackEventPayload);
  }

  exportQrels(): Promise<string> {
    return this.getText("/api/export/qrels");
  }

  health(): Promise<HealthPayload> {
    return this.getJson("/healthz");
  }
}
