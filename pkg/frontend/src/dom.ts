import type { ConsoleController } from "./console.js";
import type { Scene } from "./scene.js";

/** Map extent in meters; the view auto-fits markers inside it. */
const VIEW = { width: 640, height: 480, padding: 30 };

function svgElement<K extends keyof SVGElementTagNameMap>(
  tag: K,
  attrs: Record<string, string | number>,
): SVGElementTagNameMap[K] {
  const node = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, String(value));
  }
  return node;
}

function extent(scene: Scene): { minX: number; maxX: number; minY: number; maxY: number } {
  const xs = [...scene.aps.map((ap) => ap.x), ...scene.markers.map((m) => m.x)];
  const ys = [...scene.aps.map((ap) => ap.y), ...scene.markers.map((m) => m.y)];
  if (xs.length === 0) {
    return { minX: 0, maxX: 10, minY: 0, maxY: 10 };
  }
  const pad = scene.gridSpacing;
  return {
    minX: Math.min(...xs) - pad,
    maxX: Math.max(...xs) + pad,
    minY: Math.min(...ys) - pad,
    maxY: Math.max(...ys) + pad,
  };
}

/** Draw the scene into the container: metric grid, AP squares, device
 *  circles (black, red when alarmed), dialogs and the event log tail. */
export function renderScene(root: HTMLElement, scene: Scene, controller: ConsoleController): void {
  root.replaceChildren();

  const status = document.createElement("div");
  status.className = "statusbar";
  status.textContent = `phase: ${scene.phase}` + (scene.banner ? ` | ${scene.banner}` : "");
  if (scene.alarmActive) {
    const pulse = document.createElement("span");
    pulse.className = "alarm-pulse";
    pulse.textContent = " ALARM";
    status.append(pulse);
  }
  root.append(status);

  const toolbar = document.createElement("div");
  toolbar.className = "toolbar";
  const initButton = document.createElement("button");
  initButton.textContent = "Initialization";
  initButton.onclick = () => controller.openCalibration();
  const exitButton = document.createElement("button");
  exitButton.textContent = "Exit";
  exitButton.onclick = () => void controller.requestExit();
  toolbar.append(initButton, exitButton);
  root.append(toolbar);

  const box = extent(scene);
  const scaleX = (VIEW.width - 2 * VIEW.padding) / (box.maxX - box.minX);
  const scaleY = (VIEW.height - 2 * VIEW.padding) / (box.maxY - box.minY);
  const toPx = (x: number, y: number): [number, number] => [
    VIEW.padding + (x - box.minX) * scaleX,
    VIEW.height - VIEW.padding - (y - box.minY) * scaleY,
  ];

  const svg = svgElement("svg", {
    width: VIEW.width,
    height: VIEW.height,
    viewBox: `0 0 ${VIEW.width} ${VIEW.height}`,
  });
  svg.classList.add("map");

  for (let gx = Math.ceil(box.minX / scene.gridSpacing) * scene.gridSpacing; gx <= box.maxX; gx += scene.gridSpacing) {
    const [px] = toPx(gx, 0);
    svg.append(svgElement("line", { x1: px, y1: 0, x2: px, y2: VIEW.height, class: "grid" }));
  }
  for (let gy = Math.ceil(box.minY / scene.gridSpacing) * scene.gridSpacing; gy <= box.maxY; gy += scene.gridSpacing) {
    const [, py] = toPx(0, gy);
    svg.append(svgElement("line", { x1: 0, y1: py, x2: VIEW.width, y2: py, class: "grid" }));
  }

  for (const ap of scene.aps) {
    const [px, py] = toPx(ap.x, ap.y);
    svg.append(svgElement("rect", {
      x: px - 6, y: py - 6, width: 12, height: 12,
      class: ap.down ? "ap down" : "ap",
    }));
    const label = svgElement("text", { x: px + 8, y: py - 8, class: "ap-label" });
    label.textContent = ap.code;
    svg.append(label);
  }

  for (const marker of scene.markers) {
    const [px, py] = toPx(marker.x, marker.y);
    const circle = svgElement("circle", { cx: px, cy: py, r: 7, fill: marker.color });
    circle.classList.add("device");
    if (marker.color === "red") {
      circle.classList.add("alarmed");
    }
    circle.addEventListener("click", () => void controller.refreshDevice(marker.id));
    svg.append(circle);
    const label = svgElement("text", { x: px + 10, y: py + 4, class: "device-label" });
    label.textContent = `${marker.label} ${marker.coordinates}${marker.badge ? " [" + marker.badge + "]" : ""}`;
    svg.append(label);
  }
  root.append(svg);

  const log = document.createElement("pre");
  log.className = "eventlog";
  log.textContent = scene.log.join("\n");
  root.append(log);

  if (scene.dialog !== null) {
    root.append(renderDialog(scene, controller));
  }
}

function renderDialog(scene: Scene, controller: ConsoleController): HTMLElement {
  const overlay = document.createElement("div");
  overlay.className = "dialog";
  const dialog = scene.dialog!;

  const title = document.createElement("h3");
  const body = document.createElement("div");
  const buttons = document.createElement("div");
  buttons.className = "dialog-buttons";

  switch (dialog.kind) {
    case "calibration-entry": {
      title.textContent = "Distance-Time Pair Entry";
      const table = document.createElement("table");
      for (const [distance, time] of dialog.rows) {
        const row = document.createElement("tr");
        row.innerHTML = `<td>${distance}</td><td>${time}</td>`;
        table.append(row);
      }
      const distanceInput = document.createElement("input");
      distanceInput.placeholder = "distance (m)";
      const timeInput = document.createElement("input");
      timeInput.placeholder = "total time (s)";
      const add = document.createElement("button");
      add.textContent = "Add pair";
      add.onclick = () =>
        controller.addCalibrationRow(Number(distanceInput.value), Number(timeInput.value));
      const done = document.createElement("button");
      done.textContent = "Done";
      done.onclick = () => void controller.submitCalibration();
      body.append(table, distanceInput, timeInput, add);
      buttons.append(done);
      break;
    }
    case "calibration-prompt": {
      title.textContent = "Not enough pairs";
      body.textContent = `Only ${dialog.count} distance-time pairs entered; at least 5 are required.`;
      const cont = document.createElement("button");
      cont.textContent = "Continue";
      cont.onclick = () => controller.continueCalibration();
      const abort = document.createElement("button");
      abort.textContent = "Abort";
      abort.onclick = () => void controller.abortCalibration();
      buttons.append(cont, abort);
      break;
    }
    case "calibration-result": {
      title.textContent = "Channel calibrated";
      body.textContent = `signal speed V = ${dialog.speedMps} m/s, transmission error C = ${dialog.errorM} m`;
      const ok = document.createElement("button");
      ok.textContent = "OK";
      ok.onclick = () => controller.closeDialog();
      buttons.append(ok);
      break;
    }
    case "exit-blocked": {
      title.textContent = "Cannot exit";
      body.textContent = `Devices still connected: ${dialog.devices.join(", ")}`;
      const ok = document.createElement("button");
      ok.textContent = "OK";
      ok.onclick = () => controller.closeDialog();
      buttons.append(ok);
      break;
    }
    case "error": {
      title.textContent = "Error";
      body.textContent = dialog.message;
      const ok = document.createElement("button");
      ok.textContent = "OK";
      ok.onclick = () => controller.closeDialog();
      buttons.append(ok);
      break;
    }
  }

  overlay.append(title, body, buttons);
  return overlay;
}
