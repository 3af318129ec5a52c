import type { ViewModel } from "./model.js";
import { anyAlarmActive } from "./model.js";

/**
 * Declarative render model. The DOM layer draws exactly what is here;
 * tests assert on it without a browser.
 */
export interface Marker {
  id: string;
  label: string;
  x: number;
  y: number;
  color: "black" | "red";
  badge: "error" | "offline" | null;
  coordinates: string;
}

export interface ApMarker {
  code: string;
  x: number;
  y: number;
  down: boolean;
}

export type Dialog =
  | { kind: "calibration-entry"; rows: Array<[number, number]> }
  | { kind: "calibration-prompt"; count: number; options: string[] }
  | { kind: "calibration-result"; speedMps: number; errorM: number }
  | { kind: "exit-blocked"; devices: string[] }
  | { kind: "error"; message: string };

export interface Scene {
  phase: string;
  gridSpacing: number;
  aps: ApMarker[];
  markers: Marker[];
  alarmActive: boolean;
  banner: string | null;
  dialog: Dialog | null;
  log: string[];
}

function describe(record: { at: number; kind: string; device?: string; ap?: string }): string {
  const who = record.device ?? record.ap ?? "";
  return `t=${record.at.toFixed(1)} ${record.kind}${who ? " " + who : ""}`;
}

function coordinateText(x: number, y: number): string {
  return `(${x.toFixed(2)}, ${y.toFixed(2)})`;
}

/**
 * Project the view model into the scene. A marker is red exactly when the
 * backend says its alarm is active; positions are shown in coordinate form.
 */
export function buildScene(
  vm: ViewModel,
  ui: { dialog: Dialog | null; banner: string | null } = { dialog: null, banner: null },
): Scene {
  const markers: Marker[] = [];
  for (const device of vm.devices.values()) {
    if (device.last === null) {
      continue;
    }
    markers.push({
      id: device.id,
      label: device.name === device.id ? device.id : `${device.name}(${device.id})`,
      x: device.last.x,
      y: device.last.y,
      color: device.alarmed ? "red" : "black",
      badge: device.link === "connected" ? null : device.link,
      coordinates: coordinateText(device.last.x, device.last.y),
    });
  }
  const aps: ApMarker[] = (vm.layout?.aps ?? []).map((ap) => ({
    code: ap.code,
    x: ap.x,
    y: ap.y,
    down: vm.downAps.has(ap.code),
  }));
  return {
    phase: vm.phase,
    gridSpacing: vm.gridSpacing,
    aps,
    markers,
    alarmActive: anyAlarmActive(vm),
    banner: ui.banner,
    dialog: ui.dialog,
    log: vm.log.slice(-10).map(describe),
  };
}
