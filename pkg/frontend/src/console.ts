import { applyEvent, fromSnapshot, type ViewModel } from "./model.js";
import { buildScene, type Dialog, type Scene } from "./scene.js";
import type { ApiClient, EventRecord } from "./types.js";

/**
 * The operator console's behaviour, free of any DOM:
 * load a snapshot, fold stream records, and run the operator actions
 * (Refresh, Exit, calibration entry, rename). A render callback receives
 * a fresh Scene after every change.
 */
export class ConsoleController {
  private vm: ViewModel | null = null;
  private dialog: Dialog | null = null;
  private banner: string | null = null;
  private calibrationRows: Array<[number, number]> = [];

  constructor(
    private readonly api: ApiClient,
    private readonly render: (scene: Scene) => void = () => {},
  ) {}

  get scene(): Scene {
    if (this.vm === null) {
      throw new Error("console not loaded");
    }
    return buildScene(this.vm, { dialog: this.dialog, banner: this.banner });
  }

  get sinceSeq(): number {
    return this.vm?.lastSeq ?? 0;
  }

  private paint(): void {
    if (this.vm !== null) {
      this.render(this.scene);
    }
  }

  /** Fetch the snapshot; stream records arriving afterwards are folded in. */
  async load(): Promise<void> {
    this.vm = fromSnapshot(await this.api.getState());
    this.paint();
  }

  /** Entry point for the event stream subscription. */
  handleEvent = (record: EventRecord): void => {
    if (this.vm === null) {
      return;
    }
    applyEvent(this.vm, record);
    this.paint();
  };

  // -- Refresh / Exit ------------------------------------------------------

  /** Refresh stops the alarm; the marker returns to black when the
   *  backend's alarm_cleared record arrives on the stream. */
  async refreshDevice(deviceId: string): Promise<void> {
    try {
      await this.api.refresh(deviceId);
    } catch (error) {
      this.dialog = { kind: "error", message: String(error) };
      this.paint();
    }
  }

  /** Exit is guarded: a blocked verdict lists the still-connected devices. */
  async requestExit(): Promise<void> {
    const verdict = await this.api.shutdown();
    if (verdict.status === "blocked") {
      this.dialog = { kind: "exit-blocked", devices: verdict.devices };
    } else {
      this.banner = "monitoring service stopped";
      this.dialog = null;
    }
    this.paint();
  }

  closeDialog(): void {
    this.dialog = null;
    this.paint();
  }

  // -- calibration entry ------------------------------------------------------

  openCalibration(): void {
    this.dialog = { kind: "calibration-entry", rows: [...this.calibrationRows] };
    this.paint();
  }

  addCalibrationRow(distanceM: number, totalTimeS: number): void {
    this.calibrationRows.push([distanceM, totalTimeS]);
    this.openCalibration();
  }

  /** The Done button: fewer than five rows yields the continue/abort
   *  prompt from the backend; five or more yields the fitted V and C. */
  async submitCalibration(): Promise<void> {
    try {
      const result = await this.api.submitCalibration(this.calibrationRows);
      if (result.status === "prompt") {
        this.dialog = { kind: "calibration-prompt", count: result.count, options: result.options };
      } else {
        this.dialog = { kind: "calibration-result", speedMps: result.speed_mps, errorM: result.error_m };
        this.calibrationRows = [];
      }
    } catch (error) {
      this.dialog = { kind: "error", message: String(error) };
    }
    this.paint();
  }

  /** Continue returns to the entry dialog with the rows intact. */
  continueCalibration(): void {
    this.openCalibration();
  }

  /** Abort discards the entry; the backend keeps nothing either. */
  async abortCalibration(): Promise<void> {
    await this.api.abortCalibration();
    this.calibrationRows = [];
    this.dialog = null;
    this.paint();
  }

  // -- rename (optimistic) -------------------------------------------------------

  async renameDevice(deviceId: string, name: string): Promise<void> {
    const device = this.vm?.devices.get(deviceId);
    const previous = device?.name;
    if (device !== undefined) {
      device.name = name;
      this.paint();
    }
    try {
      await this.api.rename(deviceId, name);
    } catch (error) {
      if (device !== undefined && previous !== undefined) {
        device.name = previous;
      }
      this.dialog = { kind: "error", message: String(error) };
      this.paint();
    }
  }
}
