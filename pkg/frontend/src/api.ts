import type {
  ApEntry,
  ApiClient,
  CalibrationResult,
  LayoutResult,
  ShutdownResult,
  Snapshot,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly error: string,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

/**
 * HTTP client for the monitoring service. All positions and alarm states
 * come from the backend verbatim; nothing is computed here.
 */
export class HttpApiClient implements ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    const body = (await response.json()) as Record<string, unknown>;
    if (!response.ok && !("status" in body)) {
      throw new ApiError(
        response.status,
        String(body.error ?? "Error"),
        String(body.message ?? response.statusText),
      );
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getState(): Promise<Snapshot> {
    return this.request<Snapshot>("/state");
  }

  submitCalibration(pairs: Array<[number, number]>): Promise<CalibrationResult> {
    return this.post<CalibrationResult>("/calibration", { pairs });
  }

  abortCalibration(): Promise<{ status: string; phase: string }> {
    return this.post("/calibration", { action: "abort" });
  }

  setLayout(aps: ApEntry[]): Promise<LayoutResult> {
    return this.post<LayoutResult>("/layout", { aps });
  }

  refresh(deviceId: string): Promise<{ status: string }> {
    return this.post(`/refresh/${encodeURIComponent(deviceId)}`, {});
  }

  rename(deviceId: string, name: string): Promise<{ status: string }> {
    return this.post(`/rename/${encodeURIComponent(deviceId)}`, { name });
  }

  /** Blocked shutdowns come back as HTTP 409 with a device list; both
   *  outcomes are results rather than errors for the console. */
  shutdown(): Promise<ShutdownResult> {
    return this.post<ShutdownResult>("/shutdown", {});
  }
}
