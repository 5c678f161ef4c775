/**
 * ConsoleState: everything the operator console renders, fed exclusively by
 * gateway frames. The console never decodes or re-derives pipeline state;
 * it displays what arrived and remembers a bounded history.
 */
import type {
  DecisionPayload,
  EegBlockPayload,
  MarkerPayload,
  RobotStatePayload,
  StimulusStatePayload,
  StreamFrame,
} from "./types.js";

export const DECISION_HISTORY_LIMIT = 50;
export const ROBOT_TRAIL_LIMIT = 200;
export const EEG_POINTS_LIMIT = 512;
export const STALL_THRESHOLD_MS = 1000;

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface FlashIndicator {
  stimulusId: number;
  until: number; // stream time when the pulse ends
}

export class ConsoleState {
  connection: ConnectionStatus = "connecting";
  /** Attended id acknowledged by the gateway; null = rest. */
  attended: number | null = null;
  /** Attended id sent but not yet acknowledged. */
  pendingAttend: number | null | undefined = undefined;

  stimulusStates: Record<string, boolean> = {};
  flashes: FlashIndicator[] = [];
  decisions: DecisionPayload[] = [];
  robot: RobotStatePayload | null = null;
  robotTrail: Array<{ x: number; y: number }> = [];
  eeg: Record<string, number[]> = {};

  streamTime = 0;
  lastFrameAt = 0; // wall-clock ms of the last received frame
  seqGaps = 0;
  frameCount = 0;
  private lastSeq: number | null = null;

  handleFrame(frame: StreamFrame, nowMs: number): void {
    this.frameCount += 1;
    this.lastFrameAt = nowMs;
    if (this.lastSeq !== null && frame.seq !== this.lastSeq + 1) {
      this.seqGaps += 1;
    }
    this.lastSeq = frame.seq;
    if (frame.t > this.streamTime) this.streamTime = frame.t;

    switch (frame.kind) {
      case "StimulusState": {
        const p = frame.payload as unknown as StimulusStatePayload;
        this.stimulusStates = p.states;
        break;
      }
      case "Marker": {
        const p = frame.payload as unknown as MarkerPayload;
        this.flashes.push({ stimulusId: p.stimulus_id, until: frame.t + p.duration });
        this.flashes = this.flashes.filter((f) => f.until > this.streamTime);
        break;
      }
      case "Decision": {
        const p = frame.payload as unknown as DecisionPayload;
        this.decisions.push(p);
        if (this.decisions.length > DECISION_HISTORY_LIMIT) {
          this.decisions.shift();
        }
        break;
      }
      case "RobotState": {
        const p = frame.payload as unknown as RobotStatePayload;
        this.robot = p;
        this.robotTrail.push({ x: p.x, y: p.y });
        if (this.robotTrail.length > ROBOT_TRAIL_LIMIT) {
          this.robotTrail.shift();
        }
        break;
      }
      case "EegBlock": {
        const p = frame.payload as unknown as EegBlockPayload;
        for (const [label, samples] of Object.entries(p.channels)) {
          const buf = (this.eeg[label] ??= []);
          buf.push(...samples);
          if (buf.length > EEG_POINTS_LIMIT) {
            buf.splice(0, buf.length - EEG_POINTS_LIMIT);
          }
        }
        break;
      }
      case "Clock":
        break;
    }
  }

  /** Record a gaze message sent to the gateway (highlight waits for the ack). */
  gazeSent(attend: number | "rest"): void {
    this.pendingAttend = attend === "rest" ? null : attend;
  }

  /** Apply a gateway acknowledgement; only then does the highlight move. */
  gazeAcknowledged(ok: boolean): void {
    if (ok && this.pendingAttend !== undefined) {
      this.attended = this.pendingAttend;
    }
    this.pendingAttend = undefined;
  }

  latestDecision(): DecisionPayload | null {
    return this.decisions.length ? this.decisions[this.decisions.length - 1] : null;
  }

  isStalled(nowMs: number): boolean {
    return this.connection === "open" &&
      this.lastFrameAt > 0 &&
      nowMs - this.lastFrameAt > STALL_THRESHOLD_MS;
  }

  activeFlash(stimulusId: number): boolean {
    return this.flashes.some(
      (f) => f.stimulusId === stimulusId && f.until > this.streamTime,
    );
  }
}
