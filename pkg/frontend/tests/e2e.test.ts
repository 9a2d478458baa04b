/** End-to-end assessment workflow against a live search service.
 *
 * The suite generates a small corpus, builds an index, freezes a plan with
 * three full pages of twenty results, and boots the Python service on a
 * scratch port. The assessment view then judges a complete query, twenty
 * results on both levels, through real HTTP, and the exported qrels must
 * reproduce the toggles exactly. Requires the backend package installed
 * (the `shiftsearch` entry point on PATH).
 */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import * as fs from "node:fs";
import { request } from "node:http";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, LEVELS, type FetchLike, type Level } from "../src/api.js";
import { AssessView } from "../src/assess.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const REPO = path.resolve(HERE, "..", "..");

// plain node http, immune to whatever the DOM test environment does to fetch
const httpFetch: FetchLike = (url, init) =>
  new Promise((resolve, reject) => {
    const req = request(
      url,
      {
        method: init?.method ?? "GET",
        headers: (init?.headers as Record<string, string>) ?? {},
      },
      (res) => {
        const chunks: Buffer[] = [];
        res.on("data", (chunk: Buffer) => chunks.push(chunk));
        res.on("end", () => {
          const text = Buffer.concat(chunks).toString("utf-8");
          const status = res.statusCode ?? 0;
          resolve({
            ok: status >= 200 && status < 300,
            status,
            json: async () => JSON.parse(text) as unknown,
            text: async () => text,
          } as unknown as Response);
        });
      },
    );
    req.on("error", reject);
    if (init?.body !== undefined) req.write(init.body as string);
    req.end();
  });

async function waitHealthy(base: string): Promise<void> {
  for (let attempt = 0; attempt < 120; attempt += 1) {
    try {
      const res = await httpFetch(`${base}/healthz`);
      if (res.ok) return;
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error(`service at ${base} never became healthy`);
}

let tmp: string;
let server: ChildProcess | null = null;
let base: string;

beforeAll(async () => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "shiftsearch-ui-e2e-"));
  const dataDir = path.join(tmp, "data");
  const idxDir = path.join(tmp, "idx");

  execFileSync(
    "shiftsearch",
    ["gen", "corpus", "--seed", "7", "--records", "80", "--locations", "6", "--out", dataDir],
    { stdio: "pipe" },
  );
  // crafted queries without digits or quotes: no exact-match filter, so every
  // record is a candidate and each frozen list holds a full page of 20
  fs.writeFileSync(
    path.join(tmp, "queries.tsv"),
    "e2e_q1\tPumpe Leckage\ne2e_q2\tVentil Wartung\ne2e_q3\tKessel Temperatur\n",
    "utf-8",
  );
  execFileSync(
    "shiftsearch",
    [
      "index", "build",
      "--records", path.join(dataDir, "records.jsonl"),
      "--dictionary", path.join(dataDir, "dictionary.tsv"),
      "--dim", "64", "--seed", "13",
      "--out", idxDir,
    ],
    { stdio: "pipe" },
  );
  execFileSync(
    "python3",
    [
      path.join(REPO, "scripts", "make_assessment_plan.py"),
      "--index", idxDir,
      "--queries", path.join(tmp, "queries.tsv"),
      "--assessors", "a1",
      "--per-assessor", "3",
      "--redundancy", "1",
      "--depth", "20",
      "--out", path.join(tmp, "plan.json"),
    ],
    { stdio: "pipe" },
  );

  const port = 18300 + (process.pid % 1500);
  base = `http://127.0.0.1:${port}`;
  server = spawn(
    "shiftsearch",
    [
      "serve",
      "--index", idxDir,
      "--host", "127.0.0.1",
      "--port", String(port),
      "--feedback-log", path.join(tmp, "feedback.jsonl"),
      "--plan", path.join(tmp, "plan.json"),
    ],
    { stdio: "pipe" },
  );
  await waitHealthy(base);
});

afterAll(async () => {
  if (server) {
    server.kill("SIGTERM");
    await new Promise((resolve) => {
      server?.once("exit", resolve);
      setTimeout(resolve, 5000);
    });
  }
  fs.rmSync(tmp, { recursive: true, force: true });
});

function clickToggle(item: Element, level: Level, relevant: boolean): void {
  const choice = relevant ? "relevant" : "not";
  const button = item.querySelector<HTMLButtonElement>(
    `.toggle-group[data-level="${level}"] button[data-choice="${choice}"]`,
  );
  if (!button) throw new Error(`missing ${level}/${choice} toggle`);
  button.click();
}

describe("assessment workflow end to end", () => {
  it("judges a full query on both levels and the exported qrels match the toggles", async () => {
    const api = new ApiClient(base, httpFetch);

    // the frozen plan must not leak scores to the assessor
    const plan = await api.plan("a1");
    expect(JSON.stringify(plan)).not.toMatch(/score/i);
    expect(plan.queries).toHaveLength(3);

    const root = document.createElement("div");
    document.body.append(root);
    const view = new AssessView(root, api, "a1");
    await view.init();

    const queryId = view.currentQueryId();
    expect(queryId).not.toBeNull();
    const items = [...root.querySelectorAll(".assess-item")];
    expect(items).toHaveLength(20);
    expect(root.innerHTML.toLowerCase()).not.toContain("score");

    // judge all 20 results x 2 levels with a mixed pattern
    const expected = new Map<string, number>();
    items.forEach((item, i) => {
      const recordId = item.getAttribute("data-record-id") ?? "";
      const termRelevant = i % 2 === 0;
      const phraseRelevant = i % 3 === 0;
      clickToggle(item, "term", termRelevant);
      clickToggle(item, "phrase", phraseRelevant);
      expected.set(recordId, (termRelevant ? 1 : 0) + (phraseRelevant ? 1 : 0));
    });
    await view.idle();

    expect(root.querySelector(".progress-count")?.textContent).toBe("20/20");
    const note = root.querySelector<HTMLElement>(".complete-note");
    expect(note?.hidden).toBe(false);

    // the fused qrels reproduce every toggle, grade 0 rows included
    const qrels = await api.exportQrels();
    const grades = new Map<string, number>();
    for (const line of qrels.trim().split("\n")) {
      const [qid, , recordId, grade] = line.split(" ");
      if (qid === queryId && recordId) grades.set(recordId, Number(grade));
    }
    expect(grades.size).toBe(20);
    for (const [recordId, grade] of expected) {
      expect(grades.get(recordId)).toBe(grade);
    }
  });

  it("flipping a judgment twice keeps only the last state", async () => {
    const api = new ApiClient(base, httpFetch);
    const root = document.createElement("div");
    document.body.append(root);
    const view = new AssessView(root, api, "a1");
    await view.init();
    const queryId = view.currentQueryId();
    const first = root.querySelector(".assess-item");
    if (!first || !queryId) throw new Error("assessment view did not render");
    const recordId = first.getAttribute("data-record-id") ?? "";

    clickToggle(first, "phrase", false);
    clickToggle(first, "phrase", true);
    await view.idle();

    const events = await api.exportFeedback();
    const mine = events.filter(
      (e) =>
        e.assessor_id === "a1" &&
        e.query_id === queryId &&
        e.record_id === recordId &&
        e.level === "phrase",
    );
    // the export is deduplicated, so exactly one event survives per toggle key
    expect(mine).toHaveLength(1);
    expect(mine[0]?.relevant).toBe(true);
  });

  it("a reload restores every judgment from the server", async () => {
    const api = new ApiClient(base, httpFetch);
    const root = document.createElement("div");
    document.body.append(root);
    const view = new AssessView(root, api, "a1");
    await view.init();

    expect(root.querySelector(".progress-count")?.textContent).toBe("20/20");
    const active = root.querySelectorAll("button.toggle.active");
    // one active choice per level per record after the full pass above
    expect(active).toHaveLength(20 * LEVELS.length);
  });
});
