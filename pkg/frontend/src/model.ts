import type { DeviceSnapshot, EventRecord, Snapshot, XY } from "./types.js";

/**
 * Client-side view of one tracked device. All values are folded from the
 * backend's snapshot and event stream; the console never computes
 * positions or alarm decisions itself.
 */
export interface DeviceView {
  id: string;
  name: string;
  initial: XY | null;
  last: XY | null;
  alarmed: boolean;
  alarmAt: XY | null;
  link: "connected" | "error" | "offline";
  linkReason: string | null;
  lastSignalAt: number | null;
}

export interface ViewModel {
  phase: Snapshot["phase"];
  devices: Map<string, DeviceView>;
  downAps: Set<string>;
  layout: Snapshot["layout"];
  params: Snapshot["params"];
  gridSpacing: number;
  lastSeq: number;
  log: EventRecord[];
}

const LOG_TAIL = 50;

function deviceFromSnapshot(entry: DeviceSnapshot): DeviceView {
  return {
    id: entry.id,
    name: entry.name,
    initial: entry.initial,
    last: entry.last,
    alarmed: entry.alarm !== null,
    alarmAt: entry.alarm === null ? null : { x: entry.alarm.x, y: entry.alarm.y },
    link: entry.link,
    linkReason: entry.link_reason,
    lastSignalAt: entry.last_signal_at,
  };
}

export function fromSnapshot(snapshot: Snapshot): ViewModel {
  const devices = new Map<string, DeviceView>();
  for (const entry of snapshot.devices) {
    devices.set(entry.id, deviceFromSnapshot(entry));
  }
  return {
    phase: snapshot.phase,
    devices,
    downAps: new Set(),
    layout: snapshot.layout,
    params: snapshot.params,
    gridSpacing: snapshot.config.grid_spacing_m,
    lastSeq: snapshot.event_seq,
    log: [],
  };
}

function ensureDevice(vm: ViewModel, id: string): DeviceView {
  let device = vm.devices.get(id);
  if (device === undefined) {
    device = {
      id,
      name: id,
      initial: null,
      last: null,
      alarmed: false,
      alarmAt: null,
      link: "connected",
      linkReason: null,
      lastSignalAt: null,
    };
    vm.devices.set(id, device);
  }
  return device;
}

/**
 * Fold one event-stream record into the view model. Mirrors the
 * backend's own replay semantics record for record.
 */
export function applyEvent(vm: ViewModel, record: EventRecord): ViewModel {
  vm.lastSeq = Math.max(vm.lastSeq, record.seq + 1);
  vm.log.push(record);
  if (vm.log.length > LOG_TAIL) {
    vm.log.splice(0, vm.log.length - LOG_TAIL);
  }

  switch (record.kind) {
    case "device_registered": {
      const device = ensureDevice(vm, record.device!);
      const pos = { x: record.x!, y: record.y! };
      device.initial = pos;
      device.last = pos;
      device.alarmed = false;
      device.alarmAt = null;
      device.link = "connected";
      device.linkReason = null;
      device.lastSignalAt = record.at;
      if (record.name !== undefined) {
        device.name = record.name;
      }
      break;
    }
    case "position_updated": {
      const device = ensureDevice(vm, record.device!);
      device.last = { x: record.x!, y: record.y! };
      device.link = "connected";
      device.linkReason = null;
      device.lastSignalAt = record.at;
      break;
    }
    case "alarm_raised": {
      const device = ensureDevice(vm, record.device!);
      device.alarmed = true;
      device.alarmAt = { x: record.x!, y: record.y! };
      break;
    }
    case "alarm_cleared": {
      const device = ensureDevice(vm, record.device!);
      device.alarmed = false;
      device.alarmAt = null;
      break;
    }
    case "device_renamed": {
      ensureDevice(vm, record.device!).name = record.name ?? record.device!;
      break;
    }
    case "device_offline": {
      const device = ensureDevice(vm, record.device!);
      device.link = "offline";
      device.linkReason = "disconnected";
      break;
    }
    case "ap_error": {
      vm.downAps.add(record.ap!);
      for (const device of vm.devices.values()) {
        if (device.link !== "offline") {
          device.link = "error";
          device.linkReason = record.reason ?? null;
        }
      }
      break;
    }
    case "ap_restored": {
      vm.downAps.delete(record.ap!);
      if (vm.downAps.size === 0) {
        for (const device of vm.devices.values()) {
          if (device.link === "error") {
            device.link = "connected";
            device.linkReason = null;
          }
        }
      }
      break;
    }
    case "epoch_reset": {
      for (const device of vm.devices.values()) {
        device.initial = null;
        device.last = null;
        device.alarmed = false;
        device.alarmAt = null;
        device.lastSignalAt = null;
      }
      break;
    }
    case "calibration_fitted":
    case "layout_set":
    case "geometry_error":
    case "out_of_range":
      break; // log-only records
    default:
      break; // forward compatible: unknown kinds stay in the log
  }
  return vm;
}

export function anyAlarmActive(vm: ViewModel): boolean {
  for (const device of vm.devices.values()) {
    if (device.alarmed) {
      return true;
    }
  }
  return false;
}
