import { describe, expect, it } from "vitest";

import {
  ApiClient,
  type FetchLike,
  type Metrics,
  type StatusPayload,
  type Suggestion,
} from "../src/api.js";
import { DashboardStore } from "../src/state.js";

function metrics(used: number, budget: number): Metrics {
  return {
    budget,
    experiments_used: used,
    budget_remaining: budget - used,
    seed_observations: 0,
    discovery_rate: 0,
    total_successes: 0,
    space_cardinality: 81,
    fraction_explored: used / 81,
  };
}

function statusPayload(version: number, used: number, budget = 6): StatusPayload {
  return {
    state_version: version,
    created_at: "t0",
    space: {
      axes: [
        { name: "x", low: 0, high: 8, step: 1, cardinality: 9 },
        { name: "y", low: 0, high: 8, step: 1, cardinality: 9 },
      ],
      fixed_context: {},
      cardinality: 81,
    },
    settings: {
      budget,
      batch_size: 2,
      policy: "beam",
      k: 5,
      gamma: 0.05,
      pool_cap: 100000,
      rng_seed: 0,
    },
    metrics: metrics(used, budget),
    pending_count: 0,
  };
}

function suggestion(index: number): Suggestion {
  return { index, values: [index % 9, Math.floor(index / 9)], p: 0.05, beta: 0.4, alpha: 0.45, suggested_at: "t1" };
}

// scripted service: a tiny in-memory stand-in driven through real fetch plumbing
class FakeService {
  version = 1;
  used = 0;
  budget = 6;
  suggestions: Suggestion[] = [suggestion(10), suggestion(20)];
  observations: unknown[] = [];
  recordMode: "ok" | "conflict" | "network" = "ok";
  recordGate: Promise<void> | null = null;
  posts: Array<{ path: string; body: any }> = [];

  fetch: FetchLike = async (url, init) => {
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    if (init?.method === "POST") {
      const body = JSON.parse(String(init.body));
      this.posts.push({ path, body });
      if (path === "/observations") {
        if (this.recordMode === "network") throw new TypeError("fetch failed");
        if (this.recordGate) await this.recordGate;
        if (this.recordMode === "conflict") {
          return json(409, {
            error: "version-conflict",
            detail: `state_version ${body.state_version} is stale`,
            state_version: this.version,
          });
        }
        this.version += 1;
        this.used += 1;
        this.suggestions = this.suggestions.filter((s) => s.index !== body.index);
        if (this.suggestions.length === 0 && this.used < this.budget) {
          this.suggestions = [suggestion(30), suggestion(40)];
        }
        return json(200, {
          state_version: this.version,
          recorded: { index: body.index, values: [0, 0], outcome: body.outcome, origin: "suggested", recorded_at: "t2" },
          metrics: metrics(this.used, this.budget),
        });
      }
      if (path === "/extend-budget") {
        this.version += 1;
        this.budget += body.extra;
        return json(200, { state_version: this.version, budget: this.budget, metrics: metrics(this.used, this.budget) });
      }
    }
    if (path === "/status") return json(200, statusPayload(this.version, this.used, this.budget));
    if (path === "/observations") return json(200, { state_version: this.version, observations: this.observations });
    if (path === "/suggestions") {
      if (this.used >= this.budget) {
        return json(409, { error: "budget-exhausted", detail: "spent", state_version: this.version });
      }
      return json(200, { state_version: this.version, budget_remaining: this.budget - this.used, suggestions: this.suggestions });
    }
    if (path.startsWith("/posterior-slice")) {
      return json(200, {
        axis_x: "x", axis_y: "y",
        x_values: [0, 1], y_values: [0, 1],
        matrix: [[0.05, 0.05], [0.05, 0.05]],
        observations: [],
        state_version: this.version,
      });
    }
    return json(404, { error: "http", detail: `no route ${path}`, state_version: this.version });
  };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), { status, headers: { "content-type": "application/json" } });
}

function makeStore(service: FakeService): DashboardStore {
  return new DashboardStore(new ApiClient("", service.fetch));
}

describe("two-step recording", () => {
  it("picking an outcome fires no request", async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.refresh();
    store.pick(10, 1);
    expect(service.posts).toHaveLength(0);
    expect(store.picks.get(10)).toBe(1);
  });

  it("confirm posts the pick with the current state version", async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.refresh();
    store.pick(10, 1);
    await store.confirm(10);
    expect(service.posts).toHaveLength(1);
    expect(service.posts[0]).toEqual({
      path: "/observations",
      body: { index: 10, outcome: 1, state_version: 1 },
    });
    expect(store.picks.has(10)).toBe(false);
    expect(store.log[0]!.text).toContain("configuration 10");
  });

  it("confirm without a pick is a no-op", async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.refresh();
    await store.confirm(10);
    expect(service.posts).toHaveLength(0);
  });

  it("picks on unknown cards are ignored", async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.refresh();
    store.pick(999, 1);
    expect(store.picks.size).toBe(0);
  });
});

describe("refresh after recording", () => {
  it("pulls the next batch automatically once the batch empties", async () => {
    const service = new FakeService();
    service.suggestions = [suggestion(10)];
    const store = makeStore(service);
    await store.refresh();
    store.pick(10, 0);
    await store.confirm(10);
    expect(store.suggestions.map((s) => s.index)).toEqual([30, 40]);
    expect(store.status!.metrics.experiments_used).toBe(1);
  });
});

describe("failure handling", () => {
  it("version conflict refreshes the view and prompts a retry", async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.refresh();
    service.version = 7; // another client moved the campaign ahead
    service.recordMode = "conflict";
    store.pick(10, 1);
    await store.confirm(10);
    expect(store.banner?.kind).toBe("conflict");
    expect(store.banner?.text).toContain("retry");
    expect(store.status!.state_version).toBe(7); // refreshed
    expect(store.picks.get(10)).toBe(1); // the pick survives for the retry
    expect(store.mutationInFlight).toBe(false);
  });

  it("network failure shows a banner and mutates nothing locally", async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.refresh();
    const before = store.status!.state_version;
    store.pick(10, 1);
    service.recordMode = "network";
    await store.confirm(10);
    expect(store.banner?.kind).toBe("error");
    expect(store.banner?.text).toContain("network failure");
    expect(store.status!.state_version).toBe(before);
    expect(store.picks.get(10)).toBe(1);
    expect(store.suggestions.map((s) => s.index)).toEqual([10, 20]);
    expect(store.mutationInFlight).toBe(false);
  });

  it("a failed poll keeps the last good view", async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.refresh();
    const snapshot = store.suggestions.map((s) => s.index);
    // the service dies under the same store instance
    (store as any).client = new ApiClient("", async () => { throw new TypeError("down"); });
    await store.refresh();
    expect(store.banner?.kind).toBe("error");
    expect(store.suggestions.map((s) => s.index)).toEqual(snapshot);
  });
});

describe("budget exhaustion", () => {
  it("disables recording and prompts for an extension", async () => {
    const service = new FakeService();
    service.used = 6; // spent
    const store = makeStore(service);
    await store.refresh();
    expect(store.budgetExhausted).toBe(true);
    expect(store.recordEnabled).toBe(false);
    expect(store.extendPrompt).toBe(true);
    expect(store.suggestions).toEqual([]);
  });

  it("extending the budget clears the prompt and resumes", async () => {
    const service = new FakeService();
    service.used = 6;
    const store = makeStore(service);
    await store.refresh();
    await store.extendBudget(4);
    expect(service.posts.at(-1)).toEqual({
      path: "/extend-budget",
      body: { extra: 4, state_version: 1 },
    });
    expect(store.extendPrompt).toBe(false);
    expect(store.budgetExhausted).toBe(false);
    expect(store.log[0]!.text).toContain("extended to 10");
  });
});

describe("mutation serialization", () => {
  it("allows at most one in-flight mutation", async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.refresh();
    let release!: () => void;
    service.recordGate = new Promise((r) => { release = r; });
    store.pick(10, 1);
    store.pick(20, 0);
    const first = store.confirm(10);
    const second = store.confirm(20); // gated out while the first is in flight
    release();
    await Promise.all([first, second]);
    const recordPosts = service.posts.filter((p) => p.path === "/observations");
    expect(recordPosts).toHaveLength(1);
    expect(recordPosts[0]!.body.index).toBe(10);
  });
});

describe("slice cache", () => {
  it("keeps the last good render with a stale badge when the service drops", async () => {
    const service = new FakeService();
    const store = makeStore(service);
    await store.refresh();
    await store.loadSlice("x", "y", {});
    expect(store.slice?.stale).toBe(false);
    const matrix = store.slice!.payload.matrix;
    (store as any).client = new ApiClient("", async () => { throw new TypeError("down"); });
    await store.loadSlice("x", "y", {});
    expect(store.slice?.stale).toBe(true);
    expect(store.slice?.payload.matrix).toBe(matrix);
    expect(store.banner?.kind).toBe("error");
  });
});
