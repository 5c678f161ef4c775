/** Frame and payload shapes streamed by the gateway over /stream. */

export type FrameKind =
  | "StimulusState"
  | "EegBlock"
  | "Marker"
  | "Decision"
  | "RobotState"
  | "Clock";

export interface StreamFrame {
  kind: FrameKind;
  t: number;
  seq: number;
  payload: Record<string, unknown>;
}

export interface StimulusStatePayload {
  states: Record<string, boolean>;
  attended: number | null;
}

export interface EegBlockPayload {
  start: number;
  sample_rate: number;
  channels: Record<string, number[]>;
}

export interface MarkerPayload {
  stimulus_id: number;
  code: number;
  duration: number;
}

export interface DecisionPayload {
  class_id: number;
  margin: number | "inf";
  source: string;
  low_confidence: boolean;
  command: string;
  decode_latency_s: number;
  scores: Record<string, unknown>;
}

export interface RobotStatePayload {
  x: number;
  y: number;
  heading: "N" | "E" | "S" | "W";
}

export interface StimulusInfo {
  id: number;
  frequency: number;
  duty_cycle: number;
  position: "top" | "left" | "bottom" | "right";
  marker_code: number;
}

export interface GatewayConfig {
  stimuli: StimulusInfo[];
  protocol: { focus_duration: number; rest_duration: number };
  gateway: { port: number };
}

export interface GazeAck {
  ok: boolean;
  attend?: number | "rest";
  effective_seq?: number;
  error?: string;
}
