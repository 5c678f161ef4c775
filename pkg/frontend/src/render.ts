/**
 * Canvas + DOM rendering of the console state. Pure draw-from-state: the
 * render loop reads ConsoleState and produces pixels/text, nothing else.
 */
import type { ConsoleState } from "./state.js";
import type { GatewayConfig, StimulusInfo } from "./types.js";

const POSITION_OFFSETS: Record<string, [number, number]> = {
  top: [0, -1],
  left: [-1, 0],
  bottom: [0, 1],
  right: [1, 0],
};

export function drawStimuli(
  ctx: CanvasRenderingContext2D,
  state: ConsoleState,
  stimuli: StimulusInfo[],
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const cx = width / 2;
  const cy = height / 2;
  const radius = Math.min(width, height) * 0.32;
  const r = Math.min(width, height) * 0.1;

  for (const s of stimuli) {
    const [dx, dy] = POSITION_OFFSETS[s.position] ?? [0, 0];
    const x = cx + dx * radius;
    const y = cy + dy * radius;
    const on = state.stimulusStates[String(s.id)] ?? false;
    const flashing = state.activeFlash(s.id);

    ctx.beginPath();
    ctx.arc(x, y, flashing ? r * 1.25 : r, 0, Math.PI * 2);
    ctx.fillStyle = on ? "#f5f5f5" : "#2a2a2a";
    ctx.fill();
    ctx.lineWidth = state.attended === s.id ? 5 : 2;
    ctx.strokeStyle = state.attended === s.id
      ? "#4caf50"
      : flashing
        ? "#ffc107"
        : "#666";
    ctx.stroke();

    ctx.fillStyle = on ? "#111" : "#bbb";
    ctx.font = "14px sans-serif";
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(`${s.frequency} Hz`, x, y);
  }
}

export function drawRobot(
  ctx: CanvasRenderingContext2D,
  state: ConsoleState,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const cell = 20;
  const toPx = (x: number, y: number): [number, number] => [
    width / 2 + x * cell,
    height / 2 - y * cell,
  ];

  ctx.strokeStyle = "#333";
  ctx.lineWidth = 1;
  for (let gx = 0; gx <= width; gx += cell) {
    ctx.beginPath();
    ctx.moveTo(gx + ((width / 2) % cell), 0);
    ctx.lineTo(gx + ((width / 2) % cell), height);
    ctx.stroke();
  }
  for (let gy = 0; gy <= height; gy += cell) {
    ctx.beginPath();
    ctx.moveTo(0, gy + ((height / 2) % cell));
    ctx.lineTo(width, gy + ((height / 2) % cell));
    ctx.stroke();
  }

  if (state.robotTrail.length > 1) {
    ctx.beginPath();
    const [x0, y0] = toPx(state.robotTrail[0].x, state.robotTrail[0].y);
    ctx.moveTo(x0, y0);
    for (const p of state.robotTrail.slice(1)) {
      const [px, py] = toPx(p.x, p.y);
      ctx.lineTo(px, py);
    }
    ctx.strokeStyle = "#4caf50";
    ctx.lineWidth = 2;
    ctx.stroke();
  }

  if (state.robot) {
    const [px, py] = toPx(state.robot.x, state.robot.y);
    const angle = { N: -Math.PI / 2, E: 0, S: Math.PI / 2, W: Math.PI }[
      state.robot.heading
    ];
    ctx.save();
    ctx.translate(px, py);
    ctx.rotate(angle);
    ctx.beginPath();
    ctx.moveTo(10, 0);
    ctx.lineTo(-6, 6);
    ctx.lineTo(-6, -6);
    ctx.closePath();
    ctx.fillStyle = "#ff7043";
    ctx.fill();
    ctx.restore();
  }
}

export function drawEeg(
  ctx: CanvasRenderingContext2D,
  state: ConsoleState,
  width: number,
  height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  const labels = Object.keys(state.eeg).sort();
  const laneHeight = height / Math.max(labels.length, 1);
  const colors = ["#29b6f6", "#ab47bc", "#ffee58", "#ef5350"];
  labels.forEach((label, lane) => {
    const samples = state.eeg[label];
    if (!samples.length) return;
    const mid = laneHeight * (lane + 0.5);
    const scale = laneHeight / 40; // +-20 uV per lane
    ctx.beginPath();
    samples.forEach((v, i) => {
      const x = (i / Math.max(samples.length - 1, 1)) * width;
      const y = mid - v * scale;
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.strokeStyle = colors[lane % colors.length];
    ctx.lineWidth = 1;
    ctx.stroke();
    ctx.fillStyle = "#888";
    ctx.font = "12px sans-serif";
    ctx.textAlign = "left";
    ctx.fillText(label, 4, mid - laneHeight / 2 + 12);
  });
}

export function statusText(state: ConsoleState, nowMs: number): string {
  if (state.connection !== "open") return state.connection.toUpperCase();
  if (state.isStalled(nowMs)) return "STALLED";
  const gaps = state.seqGaps ? ` (${state.seqGaps} gaps)` : "";
  return `LIVE t=${state.streamTime.toFixed(2)}s${gaps}`;
}

export function decisionText(state: ConsoleState, config: GatewayConfig | null): string {
  const d = state.latestDecision();
  if (!d) return "no decision yet";
  const freq = config?.stimuli.find((s) => s.id === d.class_id)?.frequency;
  const margin = d.margin === "inf" ? "inf" : (d.margin as number).toFixed(3);
  const flag = d.low_confidence ? " LOW-CONF" : "";
  return `class ${d.class_id}${freq ? ` (${freq} Hz)` : ""} via ${d.source} ` +
    `margin=${margin} -> ${d.command}${flag}`;
}
