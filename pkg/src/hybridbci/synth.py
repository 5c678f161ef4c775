"""Synthetic EEG generator standing in for the headset: SSVEP harmonics on O2,
flash-locked positive bumps on F4, plus white and 1/f noise."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Channel, EegRecord, SessionProtocol, StimulusConfig
from .stimulus import FlashSchedule, emit_marker_events

REST = -1  # attended id for rest segments


@dataclass(frozen=True)
class SynthParams:
    sample_rate: float = 128.0
    ssvep_amplitudes: tuple[float, float, float] = (4.0, 2.0, 1.0)  # µV per harmonic
    p300_amplitude: float = 5.0          # µV
    p300_latency: float = 0.300          # s after flash onset
    p300_width_sigma: float = 0.060      # s
    nontarget_p300_fraction: float = 0.1
    noise_white_sigma: float = 0.0       # µV
    noise_pink_sigma: float = 0.0        # µV
    seed: int = 0

    def validate(self, config: StimulusConfig) -> None:
        if any(a < 0 for a in self.ssvep_amplitudes) or self.p300_amplitude < 0:
            raise ValueError("amplitudes must be non-negative")
        if self.sample_rate <= 6.0 * config.max_frequency:
            raise ValueError(
                f"sample rate {self.sample_rate} Hz too low for third harmonic of "
                f"{config.max_frequency} Hz"
            )
        if self.p300_latency + 3.0 * self.p300_width_sigma >= 0.600:
            raise ValueError("P300 template does not fit the 600 ms peak window")


@dataclass(frozen=True)
class Segment:
    start: float
    end: float
    attended: int  # stimulus id, or REST


@dataclass(frozen=True)
class AttentionSchedule:
    segments: tuple[Segment, ...]

    def __post_init__(self):
        prev_end = 0.0
        for seg in self.segments:
            if seg.start != prev_end:
                raise ValueError(f"segments not contiguous at {seg.start}s")
            if seg.end <= seg.start:
                raise ValueError("empty segment")
            prev_end = seg.end

    @property
    def duration(self) -> float:
        return self.segments[-1].end if self.segments else 0.0

    def attended_at(self, t: float) -> int:
        for seg in self.segments:
            if seg.start <= t < seg.end:
                return seg.attended
        return REST

    def focus_segments(self) -> list[Segment]:
        return [s for s in self.segments if s.attended != REST]


def protocol_to_schedule(protocol: SessionProtocol, config: StimulusConfig) -> AttentionSchedule:
    """Per session: focus segment then rest segment for each stimulus in order."""
    segments: list[Segment] = []
    t = 0.0
    for _ in range(protocol.sessions):
        for stim_id in protocol.frequency_order:
            config.by_id(stim_id)  # raises on unknown id
            segments.append(Segment(t, t + protocol.focus_duration, stim_id))
            t += protocol.focus_duration
            if protocol.rest_duration > 0:
                segments.append(Segment(t, t + protocol.rest_duration, REST))
                t += protocol.rest_duration
    return AttentionSchedule(segments=tuple(segments))


def noise(length: int, white_sigma: float, pink_sigma: float, seed: int) -> np.ndarray:
    """White Gaussian plus 1/f-shaped noise, each scaled to its sigma."""
    if length < 0:
        raise ValueError("length must be non-negative")
    if length == 0:
        return np.zeros(0)
    rng = np.random.Generator(np.random.PCG64(seed))
    out = np.zeros(length)
    if white_sigma > 0:
        out += white_sigma * rng.standard_normal(length)
    if pink_sigma > 0:
        # shape white spectrum by 1/sqrt(f), then renormalize to pink_sigma
        white = rng.standard_normal(length)
        spectrum = np.fft.rfft(white)
        freqs = np.fft.rfftfreq(length)
        scale = np.ones_like(freqs)
        nonzero = freqs > 0
        scale[nonzero] = 1.0 / np.sqrt(freqs[nonzero])
        scale[0] = 0.0  # no DC drift
        pink = np.fft.irfft(spectrum * scale, n=length)
        std = pink.std()
        if std > 0:
            out += pink_sigma * pink / std
    return out


def synthesize(
    schedule: AttentionSchedule,
    flashes: FlashSchedule,
    params: SynthParams,
    config: StimulusConfig,
) -> EegRecord:
    """Render the two analysis channels for a session.

    O2 carries the SSVEP response of the attended stimulus (three harmonics,
    random phase per focus segment); F4 carries one Gaussian bump per flash,
    attenuated to nontarget_p300_fraction when the flashed LED is not the
    attended one. Fully deterministic under params.seed.
    """
    params.validate(config)
    duration = schedule.duration
    for f in flashes.flashes:
        if f.onset > duration:
            raise ValueError(
                f"flash at {f.onset}s outside the {duration}s attention schedule"
            )

    fs = params.sample_rate
    n = int(round(duration * fs))
    t = np.arange(n) / fs

    seeds = np.random.SeedSequence(params.seed).spawn(3)
    phase_rng = np.random.Generator(np.random.PCG64(seeds[0]))

    o2 = np.zeros(n)
    for seg in schedule.segments:
        if seg.attended == REST:
            continue
        freq = config.by_id(seg.attended).frequency
        phases = phase_rng.uniform(0.0, 2.0 * np.pi, size=len(params.ssvep_amplitudes))
        i0 = int(round(seg.start * fs))
        i1 = int(round(seg.end * fs))
        ts = t[i0:i1]
        for k, (amp, phi) in enumerate(zip(params.ssvep_amplitudes, phases), start=1):
            o2[i0:i1] += amp * np.sin(2.0 * np.pi * k * freq * ts + phi)

    f4 = np.zeros(n)
    sigma = params.p300_width_sigma
    for flash in flashes.flashes:
        attended = schedule.attended_at(flash.onset)
        gain = 1.0 if flash.stimulus_id == attended else params.nontarget_p300_fraction
        amp = params.p300_amplitude * gain
        center = flash.onset + params.p300_latency
        # bump support is ±4 sigma; everything outside is negligible
        i0 = max(0, int(np.floor((center - 4 * sigma) * fs)))
        i1 = min(n, int(np.ceil((center + 4 * sigma) * fs)) + 1)
        ts = t[i0:i1]
        f4[i0:i1] += amp * np.exp(-0.5 * ((ts - center) / sigma) ** 2)

    o2_seed, f4_seed = (int(s.generate_state(1)[0]) for s in seeds[1:])
    o2 += noise(n, params.noise_white_sigma, params.noise_pink_sigma, o2_seed)
    f4 += noise(n, params.noise_white_sigma, params.noise_pink_sigma, f4_seed)

    return EegRecord(
        sample_rate=fs,
        channels=(Channel("O2", o2), Channel("F4", f4)),
        markers=emit_marker_events(flashes, config),
    )
