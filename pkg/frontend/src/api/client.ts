import type {
  ClinicInfo,
  LensFramePayload,
  MetaResponse,
  ScenarioPayload,
  SequencePayload,
  SeriesDay,
  UnitInfo,
  UnitKind,
  WhatIfResponse,
  ComparisonRow,
} from "./types";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public kind: string,
    message: string,
  ) {
    super(message);
  }
}

/**
 * Thin typed client over the engine API. A custom fetch can be injected for
 * tests; what-if posts cancel any previous in-flight what-if so at most one
 * runs at a time.
 */
export class ApiClient {
  private whatifController: AbortController | null = null;
  public lastChecksum: string | null = null;
  public onStaleSnapshot: ((checksum: string) => void) | null = null;

  constructor(
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
    private base = "",
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiError(resp.status, body.error ?? "Error", body.message ?? "request failed");
    }
    const checksum = body.snapshot_checksum;
    if (typeof checksum === "string") {
      if (this.lastChecksum !== null && checksum !== this.lastChecksum) {
        this.onStaleSnapshot?.(checksum);
      }
      this.lastChecksum = checksum;
    }
    return body as T;
  }

  meta(): Promise<MetaResponse> {
    return this.request("/api/meta");
  }

  units(kind: UnitKind): Promise<{ units: UnitInfo[] }> {
    return this.request(`/api/units?kind=${kind}`);
  }

  clinics(unitId: string, kind: UnitKind): Promise<{ clinics: ClinicInfo[] }> {
    return this.request(`/api/units/${encodeURIComponent(unitId)}/clinics?kind=${kind}`);
  }

  series(unitId: string, kind: UnitKind, from: string, to: string): Promise<{ days: SeriesDay[] }> {
    return this.request(
      `/api/series?id=${encodeURIComponent(unitId)}&unit_kind=${kind}&from=${from}&to=${to}`,
    );
  }

  lens(
    unitIds: string[],
    kind: UnitKind,
    from: string,
    to: string,
    a: number,
    b: number,
  ): Promise<LensFramePayload> {
    const ids = unitIds.map(encodeURIComponent).join(",");
    return this.request(
      `/api/lens?ids=${ids}&unit_kind=${kind}&from=${from}&to=${to}&a=${a}&b=${b}`,
    );
  }

  compare(): Promise<{ rows: ComparisonRow[] }> {
    return this.request("/api/models/compare");
  }

  importance(model: string): Promise<{ model: string; importance: Record<string, number> }> {
    return this.request(`/api/models/importance?model=${encodeURIComponent(model)}`);
  }

  sequences(): Promise<{ sequences: SequencePayload[] }> {
    return this.request("/api/sequences");
  }

  saveSequence(unitIds: string[], kind: UnitKind, from: string, to: string): Promise<SequencePayload> {
    return this.request("/api/sequences", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ unit_ids: unitIds, unit_kind: kind, from, to }),
    });
  }

  /** Runs a scenario; a newer call aborts the one still in flight. */
  whatif(scenario: ScenarioPayload, model: string): Promise<WhatIfResponse> {
    this.whatifController?.abort();
    const controller = new AbortController();
    this.whatifController = controller;
    return this.request(`/api/whatif?model=${encodeURIComponent(model)}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ ...scenario, model }),
      signal: controller.signal,
    });
  }
}
