"""Decoding pipeline: harmonic band-energy SSVEP classification, marker-locked
P300 peak detection, and margin-gated hybrid fusion (SSVEP primary)."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import signal as sps

from .model import Decision, EegRecord, Source, StimulusConfig, margin_of

P300_EPS = 1e-12


class DecodeError(Exception):
    pass


class NoMarkersError(DecodeError):
    pass


@dataclass(frozen=True)
class DecoderParams:
    band_halfwidth: float = 1.0          # Hz, i.e. 2 Hz total bandwidth
    harmonics: tuple[int, ...] = (1, 2, 3)
    filter_order: int = 4                # even; full band-pass order
    edge_trim: float = 0.5               # s trimmed per side before variance
    p300_window: float = 0.600           # s after each marker
    p300_baseline: float = 0.100         # s before each marker
    p300_min_latency: float = 0.0
    fusion_margin_ssvep: float = 0.15
    fusion_margin_p300: float = 0.15

    def __post_init__(self):
        if self.band_halfwidth <= 0:
            raise ValueError("band halfwidth must be positive")
        if self.filter_order % 2 != 0 or self.filter_order < 2:
            raise ValueError("filter order must be a positive even integer")
        if not (self.p300_window > self.p300_min_latency >= 0):
            raise ValueError("need p300_window > p300_min_latency >= 0")
        if self.fusion_margin_ssvep < 0 or self.fusion_margin_p300 < 0:
            raise ValueError("fusion margins must be non-negative")


@dataclass(frozen=True)
class AnalysisWindow:
    start: float
    end: float
    channel_ssvep: str = "O2"
    channel_p300: str = "F4"

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError("window must have positive length")


@dataclass
class FlashScore:
    stimulus_id: int
    onset: float
    amplitude: float
    latency: float


def bandpass(
    x: np.ndarray,
    sample_rate: float,
    center: float,
    halfwidth: float,
    order: int = 4,
    zero_phase: bool = True,
) -> np.ndarray:
    """Butterworth band-pass around `center`; forward-backward (zero phase)
    offline, causal single pass for live use."""
    lo, hi = center - halfwidth, center + halfwidth
    nyq = sample_rate / 2.0
    if lo <= 0 or hi >= nyq:
        raise ValueError(f"band [{lo}, {hi}] Hz outside (0, {nyq}) Hz Nyquist range")
    sos = _design(lo / nyq, hi / nyq, order)
    if zero_phase:
        return sps.sosfiltfilt(sos, x)
    return sps.sosfilt(sos, x)


@lru_cache(maxsize=256)
def _design(lo_norm: float, hi_norm: float, order: int) -> np.ndarray:
    # scipy's N is per-edge; a band-pass of order `order` needs N = order/2
    return sps.butter(order // 2, [lo_norm, hi_norm], btype="bandpass", output="sos")


def _window_slice(record: EegRecord, window: AnalysisWindow) -> slice:
    fs = record.sample_rate
    i0 = int(round(window.start * fs))
    i1 = int(round(window.end * fs))
    if i0 < 0 or i1 > record.n_samples or i1 <= i0:
        raise DecodeError(f"window [{window.start}, {window.end}]s outside record")
    return slice(i0, i1)


def ssvep_scores(
    record: EegRecord,
    window: AnalysisWindow,
    config: StimulusConfig,
    params: DecoderParams,
) -> dict[int, float]:
    """Band energy per stimulus: variance of the band-passed window summed
    over the configured harmonics (edge transients trimmed)."""
    x = record.channel(window.channel_ssvep).samples[_window_slice(record, window)]
    fs = record.sample_rate
    trim = int(round(params.edge_trim * fs))
    scores: dict[int, float] = {}
    for stim in config.stimuli:
        energy = 0.0
        for k in params.harmonics:
            y = bandpass(x, fs, k * stim.frequency, params.band_halfwidth, params.filter_order)
            core = y[trim : len(y) - trim] if len(y) > 2 * trim else y
            energy += float(np.var(core))
        scores[stim.id] = energy
    return scores


def _argmax_lowest_frequency(scores: dict[int, float], config: StimulusConfig) -> int:
    best = max(scores.values())
    tied = [sid for sid, sc in scores.items() if sc == best]
    return min(tied, key=lambda sid: config.by_id(sid).frequency)


def classify_ssvep(scores: dict[int, float], config: StimulusConfig) -> Decision:
    if len(scores) < 2:
        raise DecodeError("need at least two candidate scores")
    class_id = _argmax_lowest_frequency(scores, config)
    margin = margin_of(scores)
    tie = sum(1 for sc in scores.values() if sc == scores[class_id]) > 1
    return Decision(
        class_id=class_id, scores=dict(scores), margin=margin,
        source=Source.SSVEP, low_confidence=tie,
    )


def p300_scores(
    record: EegRecord,
    window: AnalysisWindow,
    config: StimulusConfig,
    params: DecoderParams,
) -> tuple[dict[int, float], list[FlashScore], int]:
    """Mean baseline-corrected peak per stimulus over the markers in the
    window; also the per-flash detail and the count of flashes skipped
    because their post-marker window ran past the end of the record.

    Only samples in [onset − baseline, onset + window] around each marker
    are read.
    """
    fs = record.sample_rate
    x = record.channel(window.channel_p300).samples
    duration = record.duration

    per_stim: dict[int, list[float]] = {}
    details: list[FlashScore] = []
    skipped = 0
    for ev in record.markers:
        stim = config.by_marker_code(ev.code)
        if stim is None:
            continue
        if not (window.start <= ev.timestamp < window.end):
            continue
        if ev.timestamp + params.p300_window > duration:
            skipped += 1
            continue
        onset = ev.timestamp
        b0 = int(np.ceil((onset - params.p300_baseline) * fs))
        b1 = int(np.ceil(onset * fs))  # indices strictly before the onset sample
        b0 = max(b0, 0)
        baseline = float(np.mean(x[b0:b1])) if b1 > b0 else 0.0
        # peak window is (onset + min_latency, onset + window]
        p0 = int(np.floor((onset + params.p300_min_latency) * fs)) + 1
        p1 = int(np.floor((onset + params.p300_window) * fs))
        seg = x[p0 : p1 + 1] - baseline
        if seg.size == 0:
            skipped += 1
            continue
        peak_idx = int(np.argmax(seg))
        amplitude = float(seg[peak_idx])
        latency = (p0 + peak_idx) / fs - onset
        per_stim.setdefault(stim.id, []).append(amplitude)
        details.append(FlashScore(stim.id, onset, amplitude, latency))

    if not per_stim:
        raise NoMarkersError(
            f"no usable markers in window [{window.start}, {window.end}]s"
        )
    scores = {sid: float(np.mean(vals)) for sid, vals in per_stim.items()}
    return scores, details, skipped


def classify_p300(scores: dict[int, float], config: StimulusConfig) -> Decision:
    if len(scores) < 2:
        raise DecodeError("need at least two candidate scores")
    class_id = _argmax_lowest_frequency(scores, config)
    margin = margin_of(scores, eps=P300_EPS)
    tie = sum(1 for sc in scores.values() if sc == scores[class_id]) > 1
    return Decision(
        class_id=class_id, scores=dict(scores), margin=margin,
        source=Source.P300, low_confidence=tie,
    )


def fuse(ssvep: Decision, p300: Decision | None, params: DecoderParams) -> Decision:
    """SSVEP decides when its margin clears the gate; otherwise a confident
    P300 corrects it; otherwise fall back to SSVEP flagged low-confidence."""
    scores = {"ssvep": ssvep.scores, "p300": p300.scores if p300 else None}
    if ssvep.margin >= params.fusion_margin_ssvep:
        return Decision(ssvep.class_id, scores, ssvep.margin, Source.FUSED, False)
    if p300 is not None and p300.margin >= params.fusion_margin_p300:
        return Decision(p300.class_id, scores, p300.margin, Source.FUSED, False)
    return Decision(ssvep.class_id, scores, ssvep.margin, Source.FUSED, True)
