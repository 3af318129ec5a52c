/** Wire types mirroring the monitoring service's JSON exactly. */

export interface XY {
  x: number;
  y: number;
}

export interface ApEntry {
  code: string;
  x: number;
  y: number;
}

export interface AlarmInfo {
  since: number;
  x: number;
  y: number;
}

export type LinkStateName = "connected" | "error" | "offline";

export interface DeviceSnapshot {
  id: string;
  name: string;
  display: string;
  link: LinkStateName;
  link_reason: string | null;
  last_signal_at: number | null;
  initial: XY | null;
  last: XY | null;
  alarm: AlarmInfo | null;
}

export interface ParamsDoc {
  speed_mps: number;
  error_m: number;
  residual_rms_m: number;
  n_samples: number;
}

export interface Snapshot {
  phase: "uninitialized" | "calibrating" | "ready";
  event_seq: number;
  config: { move_threshold_m: number; grid_spacing_m: number; cadence_s: number };
  params: ParamsDoc | null;
  layout: { aps: ApEntry[]; degenerate: boolean } | null;
  devices: DeviceSnapshot[];
}

/** One record of the server's ordered event stream (`GET /events`). */
export interface EventRecord {
  seq: number;
  at: number;
  kind: string;
  device?: string;
  ap?: string;
  name?: string;
  x?: number;
  y?: number;
  reason?: string;
}

export type CalibrationResult =
  | { status: "fitted"; speed_mps: number; error_m: number; residual_rms_m: number; n_samples: number }
  | { status: "prompt"; count: number; options: string[] };

export type ShutdownResult = { status: "ok" } | { status: "blocked"; devices: string[] };

export interface LayoutResult {
  status: string;
  warning?: string;
}

/** Everything the console calls on the backend; mockable in tests. */
export interface ApiClient {
  getState(): Promise<Snapshot>;
  submitCalibration(pairs: Array<[number, number]>): Promise<CalibrationResult>;
  abortCalibration(): Promise<{ status: string; phase: string }>;
  setLayout(aps: ApEntry[]): Promise<LayoutResult>;
  refresh(deviceId: string): Promise<{ status: string }>;
  rename(deviceId: string, name: string): Promise<{ status: string }>;
  shutdown(): Promise<ShutdownResult>;
}
