"""Session orchestration: offline synthetic runs, EDF decoding, scripted live
loops, and evaluation reports."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

from . import edfio
from .configfile import AppConfig, document_of
from .decoder import (
    AnalysisWindow,
    NoMarkersError,
    classify_p300,
    classify_ssvep,
    fuse,
    p300_scores,
    ssvep_scores,
)
from .model import Decision, EegRecord, StimulusConfig, validate_config
from .robot import RobotState, apply_command, decision_to_command, replay
from .stimulus import schedule_flashes
from .synth import AttentionSchedule, Segment, REST, protocol_to_schedule, synthesize


class RunnerError(Exception):
    pass


@dataclass
class WindowResult:
    window: AnalysisWindow
    truth: int | None
    ssvep: Decision
    p300: Decision | None
    fused: Decision
    latency_s: float


@dataclass
class EvaluationReport:
    windows: list[WindowResult]
    metadata: dict
    warnings: list[str] = field(default_factory=list)

    def accuracy(self, method: str) -> float | None:
        """Fraction correct over focus windows; None when truth is absent
        or the method produced no decisions."""
        scored = [w for w in self.windows if w.truth is not None]
        if method == "p300":
            scored = [w for w in scored if w.p300 is not None]
        if not scored:
            return None
        correct = sum(1 for w in scored if _decision_of(w, method).class_id == w.truth)
        return correct / len(scored)

    def confusion(self, method: str) -> dict[int, dict[int, int]]:
        matrix: dict[int, dict[int, int]] = {}
        for w in self.windows:
            if w.truth is None:
                continue
            d = _decision_of(w, method)
            if d is None:
                continue
            matrix.setdefault(w.truth, {}).setdefault(d.class_id, 0)
            matrix[w.truth][d.class_id] += 1
        return matrix

    @property
    def mean_latency_s(self) -> float:
        if not self.windows:
            return 0.0
        return sum(w.latency_s for w in self.windows) / len(self.windows)

    def to_document(self, include_timing: bool = False) -> dict:
        """JSON-compatible report. Timing is opt-in: wall-clock latencies are
        nondeterministic and would break byte-identical reproducibility."""
        doc = {
            "metadata": self.metadata,
            "warnings": self.warnings,
            "windows": [
                {
                    "start": w.window.start,
                    "end": w.window.end,
                    "truth": w.truth,
                    "ssvep": _decision_doc(w.ssvep),
                    "p300": _decision_doc(w.p300) if w.p300 else None,
                    "fused": _decision_doc(w.fused),
                }
                for w in self.windows
            ],
            "accuracy": {m: self.accuracy(m) for m in ("ssvep", "p300", "fused")},
            "confusion": {
                m: {str(t): {str(p): c for p, c in row.items()}
                    for t, row in self.confusion(m).items()}
                for m in ("ssvep", "p300", "fused")
            },
        }
        if include_timing:
            doc["timing"] = {
                "mean_decode_latency_s": self.mean_latency_s,
                "per_window_latency_s": [w.latency_s for w in self.windows],
            }
        return doc

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_document(include_timing), sort_keys=True, indent=2)


def _decision_of(w: WindowResult, method: str) -> Decision | None:
    return {"ssvep": w.ssvep, "p300": w.p300, "fused": w.fused}[method]


def _decision_doc(d: Decision) -> dict:
    return {
        "class_id": d.class_id,
        "margin": d.margin if d.margin != float("inf") else "inf",
        "source": d.source.value,
        "low_confidence": d.low_confidence,
        "scores": _scores_doc(d.scores),
    }


def _scores_doc(scores: dict) -> dict:
    return {
        str(k): (_scores_doc(v) if isinstance(v, dict) else v)
        for k, v in scores.items()
        if v is not None
    }


def decode_window(
    record: EegRecord,
    window: AnalysisWindow,
    config: StimulusConfig,
    params,
) -> tuple[Decision, Decision | None, Decision, float]:
    """Decode one analysis window; returns (ssvep, p300-or-None, fused, latency)."""
    t0 = time.perf_counter()
    ssvep = classify_ssvep(ssvep_scores(record, window, config, params), config)
    p300: Decision | None = None
    try:
        scores, _, _ = p300_scores(record, window, config, params)
        if len(scores) >= 2:
            p300 = classify_p300(scores, config)
    except (NoMarkersError, KeyError):
        p300 = None
    fused = fuse(ssvep, p300, params)
    return ssvep, p300, fused, time.perf_counter() - t0


def run_offline(
    config: AppConfig,
    seed: int,
    sessions: int | None = None,
    out_edf=None,
) -> EvaluationReport:
    """Generate a synthetic multi-session recording, decode every focus
    window, and score against the known attention schedule. Deterministic
    per seed."""
    protocol = config.protocol
    if sessions is not None:
        protocol = type(protocol)(
            focus_duration=protocol.focus_duration,
            rest_duration=protocol.rest_duration,
            frequency_order=protocol.frequency_order,
            sessions=sessions,
        )
    report_check = validate_config(config.stimuli, protocol, config.synth.sample_rate)
    if not report_check.ok:
        raise RunnerError("invalid configuration: " + "; ".join(report_check.violations))

    schedule = protocol_to_schedule(protocol, config.stimuli)
    flashes = schedule_flashes(config.stimuli, schedule.duration, seed=seed)
    synth_params = type(config.synth)(**{**config.synth.__dict__, "seed": seed})
    record = synthesize(schedule, flashes, synth_params, config.stimuli)

    if out_edf is not None:
        edfio.write_edf(record, out_edf)

    results: list[WindowResult] = []
    for seg in schedule.focus_segments():
        window = AnalysisWindow(start=seg.start, end=seg.end)
        ssvep, p300, fused, latency = decode_window(record, window, config.stimuli, config.decoder)
        results.append(WindowResult(window, seg.attended, ssvep, p300, fused, latency))

    metadata = {
        "seed": seed,
        "sessions": protocol.sessions,
        "config": document_of(config) | _config_overrides(config, protocol, synth_params),
    }
    return EvaluationReport(windows=results, metadata=metadata)


def _config_overrides(config: AppConfig, protocol, synth_params) -> dict:
    # record the values actually used (seed and session count may be overridden)
    return {
        "protocol": {
            "focus_duration": protocol.focus_duration,
            "rest_duration": protocol.rest_duration,
            "frequency_order": list(protocol.frequency_order),
            "sessions": protocol.sessions,
        },
        "synth": {**{k: (list(v) if isinstance(v, tuple) else v)
                     for k, v in synth_params.__dict__.items()}},
    }


def windows_from_protocol(protocol, config: StimulusConfig, duration: float) -> list[AnalysisWindow]:
    schedule = protocol_to_schedule(protocol, config)
    return [
        AnalysisWindow(start=s.start, end=s.end)
        for s in schedule.focus_segments()
        if s.end <= duration
    ]


def decode_file(
    path,
    config: AppConfig,
    windows: list[AnalysisWindow] | None = None,
) -> EvaluationReport:
    """Decode a recorded EDF (truth-free). Windows default to the protocol's
    focus segments; P300 decoding degrades gracefully when the MARKER
    channel or F4 is absent."""
    record = edfio.read_edf(path)
    labels = [c.label for c in record.channels]
    if "O2" not in labels:
        raise RunnerError(f"channel O2 missing from {path} (have {labels})")
    warnings: list[str] = []
    if not record.markers:
        warnings.append("no MARKER events found; P300 decoding unavailable")
    if "F4" not in labels:
        warnings.append("channel F4 missing; P300 decoding unavailable")

    if windows is None:
        windows = windows_from_protocol(config.protocol, config.stimuli, record.duration)

    results: list[WindowResult] = []
    for window in windows:
        ssvep, p300, fused, latency = decode_window(record, window, config.stimuli, config.decoder)
        results.append(WindowResult(window, None, ssvep, p300, fused, latency))

    metadata = {"source": str(path), "sample_rate": record.sample_rate}
    return EvaluationReport(windows=results, metadata=metadata, warnings=warnings)


@dataclass
class LiveStep:
    window: AnalysisWindow
    gaze: int
    decision: Decision
    command: object
    state: RobotState
    latency_s: float


@dataclass
class LiveResult:
    steps: list[LiveStep]
    final_state: RobotState

    def commands(self) -> list:
        return [s.command for s in self.steps]


def run_live_scripted(
    config: AppConfig,
    gaze_script: list[int],
    seed: int = 0,
) -> LiveResult:
    """Closed loop with a scripted gaze source: one attended stimulus per
    focus window, each fused decision driving the simulated robot.

    Produces decisions identical to an offline decode of the same record."""
    protocol = config.protocol
    segments: list[Segment] = []
    t = 0.0
    for gaze in gaze_script:
        config.stimuli.by_id(gaze)
        segments.append(Segment(t, t + protocol.focus_duration, gaze))
        t += protocol.focus_duration
        if protocol.rest_duration > 0:
            segments.append(Segment(t, t + protocol.rest_duration, REST))
            t += protocol.rest_duration
    schedule = AttentionSchedule(segments=tuple(segments))
    flashes = schedule_flashes(config.stimuli, schedule.duration, seed=seed)
    synth_params = type(config.synth)(**{**config.synth.__dict__, "seed": seed})
    record = synthesize(schedule, flashes, synth_params, config.stimuli)

    state = RobotState()
    steps: list[LiveStep] = []
    for seg in schedule.focus_segments():
        window = AnalysisWindow(start=seg.start, end=seg.end)
        _, _, fused, latency = decode_window(record, window, config.stimuli, config.decoder)
        cmd = decision_to_command(fused, config.command_map, config.low_confidence_policy)
        state = apply_command(state, cmd, timestamp=seg.end)
        steps.append(LiveStep(window, seg.attended, fused, cmd, state, latency))
    return LiveResult(steps=steps, final_state=state)


def replay_command_log(commands) -> RobotState:
    """Independent oracle for the closed loop: fold a command list through
    the kinematics from the initial pose."""
    return replay(commands)
