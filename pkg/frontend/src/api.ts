/** Typed client over the review server's five documented endpoints. */

export const CRITERIA = [
  "completeness",
  "consistency",
  "diversity",
  "readability",
] as const;

export type Criterion = (typeof CRITERIA)[number];
export type Scores = Record<Criterion, number>;

export interface PendingItem {
  card_id: string;
  captions: { overview: string; analysis: string };
  spec_summary: string;
  chart_type?: string;
  declarative_code: string | null;
}

export interface StatsPayload {
  histograms: Record<Criterion, Record<string, number>>;
  rating_count: number;
  pass_rate: number | null;
  pass_rate_defined: boolean;
}

export interface Verdict {
  card_id: string;
  medians: Record<Criterion, number>;
  rating_count: number;
  passed: boolean;
}

export type SubmitOutcome =
  | { kind: "accepted" }
  | { kind: "duplicate"; message: string }
  | { kind: "invalid"; message: string }
  | { kind: "error"; status: number; message: string };

export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = globalThis.fetch.bind(globalThis),
  ) {}

  private url(path: string): string {
    return this.baseUrl + path;
  }

  async health(): Promise<boolean> {
    try {
      const res = await this.fetchFn(this.url("/api/health"));
      return res.ok;
    } catch {
      return false;
    }
  }

  async loadPending(workerId: string, limit = 50): Promise<PendingItem[]> {
    const query = `worker=${encodeURIComponent(workerId)}&limit=${limit}`;
    const res = await this.fetchFn(this.url(`/api/captions/pending?${query}`));
    if (!res.ok) {
      throw new Error(`pending request failed with status ${res.status}`);
    }
    return (await res.json()) as PendingItem[];
  }

  async submitRating(
    cardId: string,
    workerId: string,
    scores: Scores,
  ): Promise<SubmitOutcome> {
    const res = await this.fetchFn(this.url("/api/ratings"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ card_id: cardId, worker_id: workerId, scores }),
    });
    if (res.status === 201) return { kind: "accepted" };
    const body = await res.json().catch(() => ({}));
    const message =
      typeof body === "object" && body !== null && "error" in body
        ? String((body as { error: unknown }).error)
        : `status ${res.status}`;
    if (res.status === 409) return { kind: "duplicate", message };
    if (res.status === 422) return { kind: "invalid", message };
    return { kind: "error", status: res.status, message };
  }

  async stats(): Promise<StatsPayload> {
    const res = await this.fetchFn(this.url("/api/stats"));
    if (!res.ok) throw new Error(`stats request failed with status ${res.status}`);
    return (await res.json()) as StatsPayload;
  }

  async aggregate(body?: {
    threshold?: number;
    min_raters?: number;
  }): Promise<Verdict[]> {
    const res = await this.fetchFn(this.url("/api/aggregate"), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
    if (!res.ok) {
      throw new Error(`aggregate request failed with status ${res.status}`);
    }
    return (await res.json()) as Verdict[];
  }
}
