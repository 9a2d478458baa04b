import { describe, expect, it } from "vitest";

import { ApiClient, ApiHttpError } from "../src/api.js";
import { FakeServer, jsonRes, makeResult, searchResponse, textRes } from "./helpers.js";

function client(server: FakeServer, base = ""): ApiClient {
  return new ApiClient(base, server.fetch);
}

describe("search", () => {
  it("sends only q by default", async () => {
    const server = new FakeServer();
    server.handler = () => jsonRes(searchResponse([]));
    await client(server).search("Pumpe Leckage");
    expect(server.lastCall().url).toBe("/api/search?q=Pumpe+Leckage");
  });

  it("includes method, sort, expansion, and limit when given", async () => {
    const server = new FakeServer();
    server.handler = () => jsonRes(searchResponse([]));
    await client(server).search("Pumpe", {
      method: "bm25",
      sort: "time",
      expansion: false,
      limit: 5,
    });
    const url = server.lastCall().url;
    expect(url).toContain("method=bm25");
    expect(url).toContain("sort=time");
    expect(url).toContain("expansion=off");
    expect(url).toContain("limit=5");
  });

  it("maps expansion true to on", async () => {
    const server = new FakeServer();
    server.handler = () => jsonRes(searchResponse([]));
    await client(server).search("Pumpe", { expansion: true });
    expect(server.lastCall().url).toContain("expansion=on");
  });

  it("prefixes the base URL", async () => {
    const server = new FakeServer();
    server.handler = () => jsonRes(searchResponse([]));
    await client(server, "http://10.0.0.5:9001").search("Pumpe");
    expect(server.lastCall().url).toBe("http://10.0.0.5:9001/api/search?q=Pumpe");
  });

  it("returns the parsed payload", async () => {
    const server = new FakeServer();
    const payload = searchResponse([makeResult("r1", 1)]);
    server.handler = () => jsonRes(payload);
    const got = await client(server).search("Pumpe");
    expect(got.count).toBe(1);
    expect(got.results[0]?.record_id).toBe("r1");
  });

  it("raises ApiHttpError carrying the server's code and message", async () => {
    const server = new FakeServer();
    server.handler = () => jsonRes({ code: "empty_query", message: "empty query" }, 400);
    const error = await client(server).search("").catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiHttpError);
    const httpError = error as ApiHttpError;
    expect(httpError.status).toBe(400);
    expect(httpError.code).toBe("empty_query");
    expect(httpError.message).toBe("empty query");
  });

  it("falls back to a generic code for non-JSON error bodies", async () => {
    const server = new FakeServer();
    server.handler = () => textRes("<html>gateway timeout</html>", 504);
    const error = await client(server).search("Pumpe").catch((e: unknown) => e);
    expect(error).toBeInstanceOf(ApiHttpError);
    expect((error as ApiHttpError).code).toBe("error");
    expect((error as ApiHttpError).status).toBe(504);
  });
});

describe("record and plan lookups", () => {
  it("URL-encodes record ids", async () => {
    const server = new FakeServer();
    server.handler = () => jsonRes({});
    await client(server).record("a b/c");
    expect(server.lastCall().url).toBe("/api/records/a%20b%2Fc");
  });

  it("URL-encodes assessor ids", async () => {
    const server = new FakeServer();
    server.handler = () => jsonRes({ assessor_id: "a 1", assessment_method: "semantic", queries: [] });
    await client(server).plan("a 1");
    expect(server.lastCall().url).toBe("/api/plan/a%201");
  });
});

describe("sendFeedback", () => {
  it("posts the judgment as JSON", async () => {
    const server = new FakeServer();
    server.handler = () =>
      jsonRes({ status: "stored", plan_id: "plan", event: {} }, 201);
    await client(server).sendFeedback({
      assessor_id: "a1",
      query_id: "q1",
      record_id: "r1",
      level: "term",
      relevant: true,
    });
    const call = server.lastCall();
    expect(call.url).toBe("/api/feedback");
    expect(call.init?.method).toBe("POST");
    expect((call.init?.headers as Record<string, string>)["content-type"]).toBe(
      "application/json",
    );
    expect(JSON.parse(call.init?.body as string)).toEqual({
      assessor_id: "a1",
      query_id: "q1",
      record_id: "r1",
      level: "term",
      relevant: true,
    });
  });

  it("raises on an unknown record", async () => {
    const server = new FakeServer();
    server.handler = () => jsonRes({ code: "unknown_record", message: "no record 'zz'" }, 404);
    const error = await client(server)
      .sendFeedback({
        assessor_id: "a1",
        query_id: "q1",
        record_id: "zz",
        level: "phrase",
        relevant: false,
      })
      .catch((e: unknown) => e);
    expect((error as ApiHttpError).code).toBe("unknown_record");
  });
});

describe("exports", () => {
  it("parses the feedback export as one JSON event per line", async () => {
    const server = new FakeServer();
    const lines = [
      '{"assessor_id": "a1", "query_id": "q1", "record_id": "r1", "level": "term", "relevant": true, "timestamp": 5.0}',
      "",
      '{"assessor_id": "a2", "query_id": "q1", "record_id": "r1", "level": "phrase", "relevant": false, "timestamp": 6.0}',
    ];
    server.handler = () => textRes(lines.join("\n") + "\n");
    const events = await client(server).exportFeedback();
    expect(events).toHaveLength(2);
    expect(events[0]?.relevant).toBe(true);
    expect(events[1]?.level).toBe("phrase");
  });

  it("returns no events for an empty log", async () => {
    const server = new FakeServer();
    server.handler = () => textRes("");
    expect(await client(server).exportFeedback()).toEqual([]);
  });

  it("passes the qrels text through untouched", async () => {
    const server = new FakeServer();
    server.handler = () => textRes("q1 0 r1 4\nq1 0 r2 0\n");
    expect(await client(server).exportQrels()).toBe("q1 0 r1 4\nq1 0 r2 0\n");
  });
});
