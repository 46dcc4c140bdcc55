// Dashboard store: all campaign truth lives on the service; this object
// holds the latest fetched view plus transient UI state (outcome picks
// awaiting confirmation, banners, the slice cache).  A full reload rebuilds
// an identical view from the API alone.

import {
  ApiClient,
  ApiError,
  type ObservationRow,
  type SlicePayload,
  type StatusPayload,
  type Suggestion,
} from "./api.js";

export interface Banner {
  kind: "error" | "conflict" | "info";
  text: string;
}

export interface SliceCache {
  key: string;
  payload: SlicePayload;
  stale: boolean;
}

export interface LogEntry {
  at: string;
  text: string;
}

export class DashboardStore {
  status: StatusPayload | null = null;
  suggestions: Suggestion[] = [];
  observations: ObservationRow[] = [];
  log: LogEntry[] = [];
  banner: Banner | null = null;
  // outcome picked on a card, not yet confirmed; keyed by config index
  picks = new Map<number, 0 | 1>();
  mutationInFlight = false;
  extendPrompt = false;
  slice: SliceCache | null = null;
  onChange: () => void = () => {};

  constructor(private readonly client: ApiClient) {}

  get version(): number {
    return this.status?.state_version ?? 0;
  }

  get budgetExhausted(): boolean {
    return (this.status?.metrics.budget_remaining ?? 1) <= 0;
  }

  get recordEnabled(): boolean {
    return !this.budgetExhausted && !this.mutationInFlight;
  }

  private note(text: string): void {
    this.log.unshift({ at: new Date().toISOString(), text });
    if (this.log.length > 50) this.log.pop();
  }

  private emit(): void {
    this.onChange();
  }

  async refresh(): Promise<void> {
    try {
      const status = await this.client.status();
      const obs = await this.client.observations();
      // materializing a batch bumps the campaign version, so adopt the
      // newest version any payload reports
      let version = Math.max(status.state_version, obs.state_version);
      let suggestions: Suggestion[] = [];
      let extendPrompt = false;
      if (status.metrics.budget_remaining <= 0) {
        extendPrompt = true;
      } else {
        try {
          const sug = await this.client.suggestions();
          version = Math.max(version, sug.state_version);
          suggestions = sug.suggestions;
        } catch (err) {
          if (err instanceof ApiError && err.isBudgetExhausted) {
            extendPrompt = true;
            if (err.liveVersion !== null) version = Math.max(version, err.liveVersion);
          } else {
            throw err;
          }
        }
      }
      status.state_version = version;
      this.status = status;
      this.observations = obs.observations;
      this.suggestions = suggestions;
      this.extendPrompt = extendPrompt;
      const alive = new Set(suggestions.map((s) => s.index));
      for (const idx of [...this.picks.keys()]) {
        if (!alive.has(idx)) this.picks.delete(idx);
      }
    } catch (err) {
      // network trouble or a 5xx: keep the last good view untouched
      this.banner = { kind: "error", text: describe(err) };
    }
    this.emit();
  }

  // step one of recording: pick an outcome on a card.  Fires no request.
  pick(index: number, outcome: 0 | 1): void {
    if (!this.suggestions.some((s) => s.index === index)) return;
    this.picks.set(index, outcome);
    this.emit();
  }

  // step two: explicit confirmation posts the observation
  async confirm(index: number): Promise<void> {
    const outcome = this.picks.get(index);
    if (outcome === undefined || this.mutationInFlight || this.budgetExhausted) {
      return;
    }
    this.mutationInFlight = true;
    this.emit();
    try {
      const res = await this.client.record({
        index,
        outcome,
        state_version: this.version,
      });
      this.picks.delete(index);
      this.banner = null;
      this.note(
        `recorded ${outcome === 1 ? "success" : "failure"} for configuration ${index}`,
      );
      if (res.metrics.budget_remaining <= 0) {
        this.extendPrompt = true;
      }
    } catch (err) {
      if (err instanceof ApiError && err.isVersionConflict) {
        this.banner = {
          kind: "conflict",
          text: "campaign changed in another client; view refreshed, review and retry",
        };
        this.mutationInFlight = false;
        await this.refresh();
        return;
      }
      // non-destructive: nothing local changes on a failed mutation
      this.banner = { kind: "error", text: describe(err) };
      this.mutationInFlight = false;
      this.emit();
      return;
    }
    this.mutationInFlight = false;
    // on success the batch may have emptied; refresh pulls the next one
    await this.refresh();
  }

  async extendBudget(extra: number): Promise<void> {
    if (this.mutationInFlight || extra < 1) return;
    this.mutationInFlight = true;
    this.emit();
    try {
      const res = await this.client.extendBudget(extra, this.version);
      this.note(`budget extended to ${res.budget} experiments`);
      this.banner = null;
      this.extendPrompt = false;
    } catch (err) {
      if (err instanceof ApiError && err.isVersionConflict) {
        this.banner = {
          kind: "conflict",
          text: "campaign changed in another client; view refreshed, review and retry",
        };
        this.mutationInFlight = false;
        await this.refresh();
        return;
      }
      this.banner = { kind: "error", text: describe(err) };
      this.mutationInFlight = false;
      this.emit();
      return;
    }
    this.mutationInFlight = false;
    await this.refresh();
  }

  async loadSlice(x: string, y: string, pins: Record<string, number>): Promise<void> {
    const key = `${x}|${y}|${JSON.stringify(pins)}`;
    try {
      const payload = await this.client.slice(x, y, pins);
      this.slice = { key, payload, stale: false };
    } catch (err) {
      if (this.slice) {
        // keep the cached render, badge it as stale
        this.slice = { ...this.slice, stale: true };
      }
      this.banner = { kind: "error", text: describe(err) };
    }
    this.emit();
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.label}: ${err.detail}`;
  if (err instanceof Error) return `network failure: ${err.message}`;
  return String(err);
}
