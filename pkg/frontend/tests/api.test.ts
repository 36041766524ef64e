import { describe, expect, it } from "vitest";

import { ApiClient, Scores } from "../src/api.js";

const SCORES: Scores = {
  completeness: 3,
  consistency: 3,
  diversity: 3,
  readability: 3,
};

const DOCUMENTED_PATHS = [
  "/api/captions/pending",
  "/api/ratings",
  "/api/aggregate",
  "/api/stats",
  "/api/health",
];

function fakeFetch(status: number, body: unknown) {
  const urls: string[] = [];
  const fetchFn = (async (input: RequestInfo | URL) => {
    urls.push(String(input));
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }) as typeof fetch;
  return { urls, fetchFn };
}

describe("api client", () => {
  it("loads the pending queue", async () => {
    const { urls, fetchFn } = fakeFetch(200, [
      { card_id: "c1", captions: { overview: "o", analysis: "a" },
        spec_summary: "s", declarative_code: "{}" },
    ]);
    const client = new ApiClient("", fetchFn);
    const items = await client.loadPending("worker 1", 5);
    expect(items).toHaveLength(1);
    expect(urls[0]).toBe("/api/captions/pending?worker=worker%201&limit=5");
  });

  it("maps status codes to submit outcomes", async () => {
    for (const [status, kind] of [
      [201, "accepted"],
      [409, "duplicate"],
      [422, "invalid"],
      [404, "error"],
    ] as const) {
      const { fetchFn } = fakeFetch(status, { error: "why" });
      const client = new ApiClient("", fetchFn);
      const outcome = await client.submitRating("c1", "w1", SCORES);
      expect(outcome.kind).toBe(kind);
    }
  });

  it("every request stays inside the five documented endpoints", async () => {
    const { urls, fetchFn } = fakeFetch(200, []);
    const client = new ApiClient("", fetchFn);
    await client.loadPending("w", 1);
    await client.submitRating("c", "w", SCORES).catch(() => undefined);
    await client.stats().catch(() => undefined);
    await client.aggregate().catch(() => undefined);
    await client.health();
    expect(urls.length).toBeGreaterThanOrEqual(5);
    for (const url of urls) {
      const path = url.split("?")[0];
      expect(DOCUMENTED_PATHS).toContain(path);
    }
  });

  it("health resolves false on network failure", async () => {
    const failing = (async () => {
      throw new Error("refused");
    }) as unknown as typeof fetch;
    const client = new ApiClient("", failing);
    expect(await client.health()).toBe(false);
  });

  it("loadPending throws on a non-2xx answer", async () => {
    const { fetchFn } = fakeFetch(403, { error: "unknown worker" });
    const client = new ApiClient("", fetchFn);
    await expect(client.loadPending("w", 1)).rejects.toThrow("403");
  });
});
