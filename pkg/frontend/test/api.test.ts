import { afterEach, describe, expect, it, vi } from "vitest";

import { AnnotateClient, ServiceError } from "../src/api.js";
import { batchFixture, mockFetch, sessionFixture } from "./fixtures.js";

afterEach(() => vi.unstubAllGlobals());

describe("AnnotateClient", () => {
  it("fetches session state", async () => {
    vi.stubGlobal("fetch", mockFetch({
      "GET /sessions/abc123": () => ({ body: sessionFixture() }),
    }));
    const client = new AnnotateClient();
    const view = await client.getSession("abc123");
    expect(view.labeled_count).toBe(10);
    expect(view.class_registry["1"]).toBe("class-1");
  });

  it("posts labels with the batch id", async () => {
    let captured: unknown = null;
    vi.stubGlobal("fetch", mockFetch({
      "POST /sessions/abc123/labels": (init) => {
        captured = JSON.parse(String(init?.body));
        return {
          body: {
            session_id: "abc123", status: "idle", labeled_count: 13,
            discovered_classes: 2, new_classes: {},
            record: { labeled_count: 13, accuracy_pct: 60, discovered_classes: 2 },
          },
        };
      },
    }));
    const client = new AnnotateClient();
    const result = await client.submitLabels("abc123", "abc123-b0001", [
      { sample_id: 100, class_id: 0 },
    ]);
    expect(result.labeled_count).toBe(13);
    expect(captured).toEqual({
      batch_id: "abc123-b0001",
      labels: [{ sample_id: 100, class_id: 0 }],
    });
  });

  it("surfaces machine-readable errors", async () => {
    vi.stubGlobal("fetch", mockFetch({
      "POST /sessions/abc123/next-batch": () => ({
        status: 410,
        body: { error: { code: "pool_exhausted", message: "done" } },
      }),
    }));
    const client = new AnnotateClient();
    const err = await client.nextBatch("abc123").catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.status).toBe(410);
    expect(err.code).toBe("pool_exhausted");
  });

  it("fetches batches", async () => {
    vi.stubGlobal("fetch", mockFetch({
      "POST /sessions/abc123/next-batch": () => ({ body: batchFixture() }),
    }));
    const batch = await new AnnotateClient().nextBatch("abc123");
    expect(batch.samples).toHaveLength(3);
    expect(batch.suggested_label).toBe(1);
  });
});
