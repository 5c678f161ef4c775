/** Entry point: wires gateway client, state, keyboard, and render loop. */
import { GatewayClient } from "./client.js";
import { keyToGaze } from "./keymap.js";
import { ConsoleState } from "./state.js";
import { decisionText, drawEeg, drawRobot, drawStimuli, statusText } from "./render.js";
import type { GatewayConfig } from "./types.js";

const params = new URLSearchParams(window.location.search);
const host = params.get("host") ?? `${window.location.hostname || "127.0.0.1"}:8350`;

const state = new ConsoleState();
let config: GatewayConfig | null = null;

const stimCanvas = document.getElementById("stimuli") as HTMLCanvasElement;
const robotCanvas = document.getElementById("robot") as HTMLCanvasElement;
const eegCanvas = document.getElementById("eeg") as HTMLCanvasElement;
const statusEl = document.getElementById("status") as HTMLElement;
const decisionEl = document.getElementById("decision") as HTMLElement;
const historyEl = document.getElementById("history") as HTMLElement;

fetch(`http://${host}/config`)
  .then((r) => r.json())
  .then((doc: GatewayConfig) => {
    config = doc;
  })
  .catch(() => {
    // config panel stays empty until the gateway is reachable
  });

const client = new GatewayClient({
  baseUrl: `ws://${host}`,
  onFrame: (frame) => state.handleFrame(frame, performance.now()),
  onAck: (ack) => state.gazeAcknowledged(ack.ok),
  onStatus: (status) => {
    state.connection = status;
  },
});
client.start();

window.addEventListener("keydown", (ev) => {
  const target = keyToGaze(ev.key);
  if (target === null) return;
  state.gazeSent(target);
  client.sendGaze(target);
});

function renderLoop(): void {
  const now = performance.now();
  const sctx = stimCanvas.getContext("2d");
  if (sctx && config) {
    drawStimuli(sctx, state, config.stimuli, stimCanvas.width, stimCanvas.height);
  }
  const rctx = robotCanvas.getContext("2d");
  if (rctx) drawRobot(rctx, state, robotCanvas.width, robotCanvas.height);
  const ectx = eegCanvas.getContext("2d");
  if (ectx) drawEeg(ectx, state, eegCanvas.width, eegCanvas.height);

  statusEl.textContent = statusText(state, now);
  decisionEl.textContent = decisionText(state, config);
  historyEl.textContent = state.decisions
    .slice(-8)
    .map((d) => `${d.source[0].toUpperCase()} c${d.class_id} ${d.command}`)
    .join("\n");

  requestAnimationFrame(renderLoop);
}
requestAnimationFrame(renderLoop);
