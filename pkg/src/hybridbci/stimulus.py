"""Software model of the stimulus board: periodic flicker channels and the
random red-flash scheduler that drives the oddball events."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import MarkerEvent, StimulusConfig

DEFAULT_RESOLUTION = 0.001      # seconds per timeline tick
DEFAULT_FLASH_DURATION = 0.100  # red LED on-time, shorter than the minimum gap
MIN_GAP = 0.200
MAX_GAP = 0.800


def flicker_state(frequency: float, duty_cycle: float, t: float) -> bool:
    """ON/OFF state of a flicker channel at time t; ON at phase origin."""
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    if not (0.0 < duty_cycle < 1.0):
        raise ValueError("duty cycle must be in (0, 1)")
    if t < 0:
        raise ValueError("t must be non-negative")
    phase = (t * frequency) % 1.0
    return phase < duty_cycle


@dataclass(frozen=True)
class FlickerTimeline:
    stimulus_id: int
    frequency: float
    duty_cycle: float
    resolution: float
    states: np.ndarray  # bool per tick

    @property
    def on_fraction(self) -> float:
        return float(np.mean(self.states))

    def transitions(self) -> tuple[int, int]:
        """(ON→OFF, OFF→ON) transition counts over the timeline."""
        s = self.states.astype(np.int8)
        d = np.diff(s)
        return int(np.sum(d == -1)), int(np.sum(d == 1))


def build_flicker_timeline(
    stimulus_id: int,
    frequency: float,
    duty_cycle: float,
    duration: float,
    resolution: float = DEFAULT_RESOLUTION,
) -> FlickerTimeline:
    if duration <= 0:
        raise ValueError("duration must be positive")
    if resolution > 1.0 / (10.0 * frequency):
        raise ValueError(
            f"resolution {resolution}s too coarse for {frequency} Hz "
            f"(need ≤ {1.0 / (10.0 * frequency):.6f}s)"
        )
    n = int(round(duration / resolution))
    # midpoint sampling: tick i covers [i·res, (i+1)·res) and takes the state
    # at its center, avoiding the half-tick ON bias of edge sampling
    ticks = (np.arange(n, dtype=np.float64) + 0.5) * resolution
    phase = (ticks * frequency) % 1.0
    return FlickerTimeline(
        stimulus_id=stimulus_id,
        frequency=frequency,
        duty_cycle=duty_cycle,
        resolution=resolution,
        states=phase < duty_cycle,
    )


@dataclass(frozen=True)
class Flash:
    stimulus_id: int
    onset: float
    duration: float


@dataclass(frozen=True)
class FlashSchedule:
    flashes: tuple[Flash, ...]
    seed: int

    def gaps(self) -> np.ndarray:
        onsets = np.array([f.onset for f in self.flashes])
        return np.diff(onsets)


def schedule_flashes(
    config: StimulusConfig,
    duration: float,
    flash_duration: float = DEFAULT_FLASH_DURATION,
    seed: int = 0,
) -> FlashSchedule:
    """Random oddball schedule: inter-onset gaps uniform on [0.2, 0.8] s,
    target LED uniform among the four with no immediate repeat.

    Deterministic for a fixed seed (PCG64), so schedules reproduce anywhere.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if not (0.0 < flash_duration < MIN_GAP):
        raise ValueError(f"flash duration must be in (0, {MIN_GAP}) s")

    rng = np.random.Generator(np.random.PCG64(seed))
    ids = config.ids
    flashes: list[Flash] = []
    t = 0.0
    prev_target: int | None = None
    while True:
        t += rng.uniform(MIN_GAP, MAX_GAP)
        if t + flash_duration > duration:
            break
        candidates = [i for i in ids if i != prev_target]
        target = candidates[rng.integers(len(candidates))]
        flashes.append(Flash(stimulus_id=target, onset=t, duration=flash_duration))
        prev_target = target
    return FlashSchedule(flashes=tuple(flashes), seed=seed)


def emit_marker_events(schedule: FlashSchedule, config: StimulusConfig) -> tuple[MarkerEvent, ...]:
    """One marker per flash, carrying the flashed stimulus's code at its onset."""
    return tuple(
        MarkerEvent(code=config.by_id(f.stimulus_id).marker_code, timestamp=f.onset)
        for f in schedule.flashes
    )
