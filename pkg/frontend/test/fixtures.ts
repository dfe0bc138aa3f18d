import type { QueryBatch, SessionView } from "../src/types.js";

export function sessionFixture(over: Partial<SessionView> = {}): SessionView {
  return {
    session_id: "abc123",
    name: null,
    status: "idle",
    created_at: "2024-01-01T00:00:00+00:00",
    labeled_count: 10,
    pool_count: 30,
    discovered_classes: 2,
    class_registry: { "0": "class-0", "1": "class-1" },
    strategy: "emoc",
    batch_size: 3,
    history: [
      { labeled_count: 10, accuracy_pct: 50.0, discovered_classes: 2 },
    ],
    curves: {
      labeled_counts: [10],
      accuracy_pct: [50.0],
      discovered_classes: [2],
    },
    outstanding_batch_id: null,
    state_digest: "deadbeef",
    ...over,
  };
}

export function batchFixture(n = 3, over: Partial<QueryBatch> = {}): QueryBatch {
  return {
    batch_id: "abc123-b0001",
    session_id: "abc123",
    issued_at: "2024-01-01T00:01:00+00:00",
    suggested_label: 1,
    suggested_label_name: "class-1",
    samples: Array.from({ length: n }, (_, i) => ({
      sample_id: 100 + i,
      posterior: [0.3, 0.7],
      features: [0.1 * i, -0.2, 0.5, 0.8],
      image_url: null,
    })),
    ...over,
  };
}

export function mockFetch(
  routes: Record<string, (init?: RequestInit) => { status?: number; body: unknown }>,
): typeof fetch {
  return (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input);
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    const key = `${init?.method ?? "GET"} ${path}`;
    const handler = routes[key];
    if (!handler) {
      return new Response(JSON.stringify({
        error: { code: "not_found", message: `no route ${key}` },
      }), { status: 404, headers: { "Content-Type": "application/json" } });
    }
    const { status = 200, body } = handler(init);
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }) as typeof fetch;
}
