"""Shared domain types: stimuli, session protocol, EEG records, markers, decisions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Position(str, Enum):
    TOP = "top"
    LEFT = "left"
    BOTTOM = "bottom"
    RIGHT = "right"


class Source(str, Enum):
    SSVEP = "ssvep"
    P300 = "p300"
    FUSED = "fused"


@dataclass(frozen=True)
class Stimulus:
    id: int
    frequency: float        # Hz
    duty_cycle: float       # fraction of period ON
    position: Position
    marker_code: int


@dataclass(frozen=True)
class StimulusConfig:
    """The four flicker stimuli on the board."""

    stimuli: tuple[Stimulus, ...]

    @staticmethod
    def default() -> "StimulusConfig":
        # 7/8/9/10 Hz counter-clockwise from the top ring, 85% duty cycle.
        specs = [
            (0, 7.0, Position.TOP, 111),
            (1, 8.0, Position.LEFT, 222),
            (2, 9.0, Position.BOTTOM, 333),
            (3, 10.0, Position.RIGHT, 444),
        ]
        return StimulusConfig(
            stimuli=tuple(
                Stimulus(id=i, frequency=f, duty_cycle=0.85, position=p, marker_code=m)
                for i, f, p, m in specs
            )
        )

    def by_id(self, stimulus_id: int) -> Stimulus:
        for s in self.stimuli:
            if s.id == stimulus_id:
                return s
        raise KeyError(f"no stimulus with id {stimulus_id}")

    def by_marker_code(self, code: int) -> Stimulus | None:
        for s in self.stimuli:
            if s.marker_code == code:
                return s
        return None

    @property
    def ids(self) -> list[int]:
        return [s.id for s in self.stimuli]

    @property
    def max_frequency(self) -> float:
        return max(s.frequency for s in self.stimuli)


@dataclass(frozen=True)
class SessionProtocol:
    focus_duration: float = 3.0
    rest_duration: float = 5.0
    frequency_order: tuple[int, ...] = (0, 1, 2, 3)
    sessions: int = 5

    @property
    def session_duration(self) -> float:
        return len(self.frequency_order) * (self.focus_duration + self.rest_duration)

    @property
    def total_duration(self) -> float:
        return self.sessions * self.session_duration


@dataclass(frozen=True)
class MarkerEvent:
    code: int
    timestamp: float    # seconds from record start


@dataclass(frozen=True)
class Channel:
    label: str
    samples: np.ndarray
    physical_unit: str = "uV"

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))


@dataclass(frozen=True)
class EegRecord:
    sample_rate: float
    channels: tuple[Channel, ...]
    markers: tuple[MarkerEvent, ...] = ()

    def __post_init__(self):
        counts = {len(c.samples) for c in self.channels}
        if len(counts) > 1:
            raise ValueError(f"channels have unequal sample counts: {sorted(counts)}")
        for m in self.markers:
            if not (0.0 <= m.timestamp <= self.duration):
                raise ValueError(f"marker at {m.timestamp}s outside record [0, {self.duration}]s")
        times = [m.timestamp for m in self.markers]
        if times != sorted(times):
            raise ValueError("markers not sorted by timestamp")

    @property
    def n_samples(self) -> int:
        return len(self.channels[0].samples) if self.channels else 0

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate

    def channel(self, label: str) -> Channel:
        for c in self.channels:
            if c.label == label:
                return c
        raise KeyError(f"channel {label!r} not in record (have {[c.label for c in self.channels]})")


@dataclass(frozen=True)
class Decision:
    class_id: int
    scores: dict  # per-class scores; fused decisions carry both source maps
    margin: float
    source: Source
    low_confidence: bool = False


def margin_of(scores: dict[int, float], eps: float | None = None) -> float:
    """Relative gap between the two largest scores; +inf when the runner-up
    is non-positive (or, with eps, clamped to eps)."""
    ranked = sorted(scores.values(), reverse=True)
    top, second = ranked[0], ranked[1]
    if second <= 0.0:
        if eps is None:
            return math.inf
        second = eps
    return (top - second) / second


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_config(
    config: StimulusConfig,
    protocol: SessionProtocol,
    sample_rate: float,
) -> ValidationReport:
    """Check every structural invariant of the stimulus config and protocol,
    including the third-harmonic Nyquist bound against sample_rate.

    Violations are returned as data; nothing raises.
    """
    v: list[str] = []
    stimuli = config.stimuli
    if len(stimuli) != 4:
        v.append(f"expected exactly 4 stimuli, got {len(stimuli)}")
    freqs = [s.frequency for s in stimuli]
    if len(set(freqs)) != len(freqs):
        v.append("duplicate frequency")
    codes = [s.marker_code for s in stimuli]
    if len(set(codes)) != len(codes):
        v.append("duplicate marker code")
    positions = [s.position for s in stimuli]
    if len(set(positions)) != len(positions):
        v.append("duplicate position")
    ids = [s.id for s in stimuli]
    if len(set(ids)) != len(ids):
        v.append("duplicate stimulus id")
    for s in stimuli:
        if s.frequency <= 0:
            v.append(f"stimulus {s.id}: frequency must be positive")
        if not (0.0 < s.duty_cycle < 1.0):
            v.append(f"stimulus {s.id}: duty cycle {s.duty_cycle} outside (0, 1)")
        if s.marker_code <= 0:
            v.append(f"stimulus {s.id}: marker code must be positive")

    if sample_rate <= 0:
        v.append("sample rate must be positive")
    elif stimuli:
        fmax = max(freqs)
        nyquist = sample_rate / 2.0
        if 3.0 * fmax >= nyquist:
            v.append(
                f"3×{fmax:g} Hz = {3 * fmax:g} Hz ≥ {nyquist:g} Hz Nyquist"
            )

    if protocol.focus_duration <= 0:
        v.append("focus duration must be positive")
    if protocol.rest_duration < 0:
        v.append("rest duration must be non-negative")
    if protocol.sessions < 1:
        v.append("sessions must be a positive integer")
    if sorted(protocol.frequency_order) != sorted(ids):
        v.append("frequency_order is not a permutation of stimulus ids")

    return ValidationReport(violations=v)


def ascending_frequency_order(config: StimulusConfig) -> tuple[int, ...]:
    return tuple(s.id for s in sorted(config.stimuli, key=lambda s: s.frequency))
