import { HttpApiClient } from "./api.js";
import { ConsoleController } from "./console.js";
import { renderScene } from "./dom.js";
import { streamEvents } from "./stream.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("api") ?? `http://${window.location.hostname}:8700`;

const root = document.getElementById("console");
if (root === null) {
  throw new Error("missing #console element");
}

const api = new HttpApiClient(baseUrl);
const controller = new ConsoleController(api, (scene) => renderScene(root, scene, controller));

async function start(): Promise<void> {
  await controller.load();
  // one subscription; every pushed record repaints within the same tick
  void streamEvents(baseUrl, controller.sinceSeq, controller.handleEvent);
}

void start();
