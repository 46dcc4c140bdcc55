// Typed client over the campaign service.  Every number shown anywhere in
// the dashboard comes out of these payloads; the client never computes a
// probability itself.

export interface AxisInfo {
  name: string;
  low: number;
  high: number;
  step: number;
  cardinality: number;
}

export interface SpaceInfo {
  axes: AxisInfo[];
  fixed_context: Record<string, number>;
  cardinality: number;
}

export interface SettingsInfo {
  budget: number;
  batch_size: number;
  policy: string;
  k: number;
  gamma: number;
  pool_cap: number;
  rng_seed: number;
}

export interface Metrics {
  budget: number;
  experiments_used: number;
  budget_remaining: number;
  seed_observations: number;
  discovery_rate: number;
  total_successes: number;
  space_cardinality: number;
  fraction_explored: number;
}

export interface StatusPayload {
  state_version: number;
  created_at: string;
  space: SpaceInfo;
  settings: SettingsInfo;
  metrics: Metrics;
  pending_count: number;
}

export interface Suggestion {
  index: number;
  values: number[];
  p: number;
  beta: number;
  alpha: number;
  suggested_at: string | null;
}

export interface SuggestionsPayload {
  state_version: number;
  budget_remaining: number;
  suggestions: Suggestion[];
}

export interface ObservationRow {
  index: number;
  values: number[];
  outcome: 0 | 1;
  origin: string;
  recorded_at: string | null;
}

export interface ObservationsPayload {
  state_version: number;
  observations: ObservationRow[];
}

export interface SliceMark {
  x: number;
  y: number;
  outcome: 0 | 1;
  origin: string;
}

export interface SlicePayload {
  axis_x: string;
  axis_y: string;
  x_values: number[];
  y_values: number[];
  matrix: number[][];
  observations: SliceMark[];
  state_version: number;
}

export interface RecordBody {
  index?: number;
  values?: number[] | Record<string, number>;
  outcome: 0 | 1;
  manual?: boolean;
  state_version?: number;
}

export interface RecordedPayload {
  state_version: number;
  recorded: ObservationRow;
  metrics: Metrics;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly label: string,
    readonly detail: string,
    readonly liveVersion: number | null,
  ) {
    super(`${label}: ${detail}`);
    this.name = "ApiError";
  }

  get isVersionConflict(): boolean {
    return this.label === "version-conflict";
  }

  get isBudgetExhausted(): boolean {
    return this.label === "budget-exhausted";
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export function sliceQuery(x: string, y: string, pins: Record<string, number>): string {
  const q = new URLSearchParams({ x, y });
  for (const [axis, value] of Object.entries(pins)) {
    q.append("pin", `${axis}:${value}`);
  }
  return q.toString();
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.fetchImpl(this.base + path, init);
    const body = await res.json().catch(() => null);
    if (!res.ok) {
      throw new ApiError(
        res.status,
        body?.error ?? "http",
        String(body?.detail ?? `HTTP ${res.status}`),
        typeof body?.state_version === "number" ? body.state_version : null,
      );
    }
    return body as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  status(): Promise<StatusPayload> {
    return this.request("/status");
  }

  observations(): Promise<ObservationsPayload> {
    return this.request("/observations");
  }

  suggestions(): Promise<SuggestionsPayload> {
    return this.request("/suggestions");
  }

  slice(x: string, y: string, pins: Record<string, number>): Promise<SlicePayload> {
    return this.request(`/posterior-slice?${sliceQuery(x, y, pins)}`);
  }

  record(body: RecordBody): Promise<RecordedPayload> {
    return this.post("/observations", body);
  }

  seedImport(csv: string, stateVersion?: number): Promise<{ state_version: number; imported: number; metrics: Metrics }> {
    return this.post("/seed-import", { csv, state_version: stateVersion });
  }

  extendBudget(extra: number, stateVersion?: number): Promise<{ state_version: number; budget: number; metrics: Metrics }> {
    return this.post("/extend-budget", { extra, state_version: stateVersion });
  }
}
