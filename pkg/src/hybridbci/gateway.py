"""Streaming boundary for the live loop: stimulus states, EEG blocks, markers,
decisions, and robot pose over WebSocket; gaze-proxy input from the console.

One broadcaster task fans frames out to per-subscriber bounded queues; a
subscriber that falls behind is disconnected rather than ever stalling the
pipeline.
"""
from __future__ import annotations

import asyncio
import json
import math
from contextlib import asynccontextmanager
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .configfile import AppConfig, document_of
from .decoder import AnalysisWindow
from .model import Channel, EegRecord, MarkerEvent
from .robot import RobotState, apply_command, decision_to_command
from .runner import decode_window, _decision_doc
from .stimulus import DEFAULT_FLASH_DURATION, MIN_GAP, MAX_GAP, flicker_state
from .synth import REST

MAX_FRAME_BYTES = 64 * 1024


class FrameTooLarge(Exception):
    pass


@dataclass
class Subscriber:
    queue: asyncio.Queue
    dead: bool = False


class Broadcaster:
    """Sequenced fan-out. publish() never blocks; slow subscribers are
    dropped once their queue overflows."""

    def __init__(self, buffer_frames: int = 1024):
        self.buffer_frames = buffer_frames
        self.subscribers: list[Subscriber] = []
        self.seq = 0

    def subscribe(self) -> Subscriber:
        sub = Subscriber(queue=asyncio.Queue(maxsize=self.buffer_frames))
        self.subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: Subscriber) -> None:
        sub.dead = True
        if sub in self.subscribers:
            self.subscribers.remove(sub)

    def publish(self, kind: str, t: float, payload: dict) -> int:
        self.seq += 1
        frame = {"kind": kind, "t": t, "seq": self.seq, "payload": payload}
        encoded = json.dumps(frame)
        if len(encoded.encode("utf-8")) > MAX_FRAME_BYTES:
            self.seq -= 1
            raise FrameTooLarge(f"frame of kind {kind} exceeds {MAX_FRAME_BYTES} bytes")
        for sub in list(self.subscribers):
            try:
                sub.queue.put_nowait(encoded)
            except asyncio.QueueFull:
                self.unsubscribe(sub)  # slow subscriber: cut it loose
        return self.seq


@dataclass
class _Flash:
    stimulus_id: int
    onset: float


class LivePipeline:
    """Drives the closed loop in stream time: synthesizes EEG blocks for the
    currently attended stimulus, schedules red flashes, decodes once per
    focus-window boundary, and steps the robot."""

    def __init__(self, config: AppConfig, broadcaster: Broadcaster, seed: int = 0):
        self.config = config
        self.broadcaster = broadcaster
        self.block_samples = config.gateway.block_samples
        fs = config.synth.sample_rate
        self.fs = fs
        self.block_duration = self.block_samples / fs
        self.attended: int = REST
        self._pending_attend: int | None = None
        self.robot = RobotState()
        self.t = 0.0  # stream time, seconds
        self._o2: list[np.ndarray] = []
        self._f4: list[np.ndarray] = []
        self._flashes: list[_Flash] = []
        self._rng = np.random.Generator(np.random.PCG64(seed))
        self._next_flash = float(self._rng.uniform(MIN_GAP, MAX_GAP))
        self._prev_target: int | None = None
        self._next_decision_t = config.protocol.focus_duration
        self._phases = {s.id: 0.0 for s in config.stimuli.stimuli}
        self.decisions = 0

    def request_attend(self, stimulus_id: int) -> None:
        """Takes effect at the next block boundary."""
        self._pending_attend = stimulus_id

    def _advance_flashes(self, t0: float, t1: float) -> list[_Flash]:
        new: list[_Flash] = []
        ids = self.config.stimuli.ids
        while self._next_flash < t1:
            if self._next_flash >= t0:
                candidates = [i for i in ids if i != self._prev_target]
                target = candidates[self._rng.integers(len(candidates))]
                flash = _Flash(stimulus_id=target, onset=self._next_flash)
                new.append(flash)
                self._flashes.append(flash)
                self._prev_target = target
            self._next_flash += float(self._rng.uniform(MIN_GAP, MAX_GAP))
        return new

    def step_block(self) -> None:
        """Synthesize one block, publish its frames, and decode if a focus
        window boundary falls inside it."""
        cfg = self.config
        synth = cfg.synth
        if self._pending_attend is not None:
            self.attended = self._pending_attend
            self._pending_attend = None

        t0, t1 = self.t, self.t + self.block_duration
        ts = t0 + np.arange(self.block_samples) / self.fs

        o2 = np.zeros(self.block_samples)
        if self.attended != REST:
            f = cfg.stimuli.by_id(self.attended).frequency
            for k, amp in enumerate(synth.ssvep_amplitudes, start=1):
                o2 += amp * np.sin(2 * np.pi * k * f * ts)

        new_flashes = self._advance_flashes(t0, t1)
        f4 = np.zeros(self.block_samples)
        sigma = synth.p300_width_sigma
        for flash in self._flashes:
            center = flash.onset + synth.p300_latency
            if center + 4 * sigma < t0 or center - 4 * sigma > t1:
                continue
            gain = 1.0 if flash.stimulus_id == self.attended else synth.nontarget_p300_fraction
            f4 += synth.p300_amplitude * gain * np.exp(-0.5 * ((ts - center) / sigma) ** 2)

        if synth.noise_white_sigma > 0:
            o2 = o2 + synth.noise_white_sigma * self._rng.standard_normal(self.block_samples)
            f4 = f4 + synth.noise_white_sigma * self._rng.standard_normal(self.block_samples)

        self._o2.append(o2)
        self._f4.append(f4)

        self.broadcaster.publish("Clock", t1, {"stream_time": t1})
        self.broadcaster.publish("StimulusState", t1, {
            "states": {
                str(s.id): flicker_state(s.frequency, s.duty_cycle, t1)
                for s in cfg.stimuli.stimuli
            },
            "attended": None if self.attended == REST else self.attended,
        })
        for flash in new_flashes:
            self.broadcaster.publish("Marker", flash.onset, {
                "stimulus_id": flash.stimulus_id,
                "code": cfg.stimuli.by_id(flash.stimulus_id).marker_code,
                "duration": DEFAULT_FLASH_DURATION,
            })
        step = max(1, math.ceil(self.block_samples / 32))  # ≤ 32 samples per frame
        self.broadcaster.publish("EegBlock", t1, {
            "start": t0,
            "sample_rate": self.fs / step,
            "channels": {
                "O2": [round(v, 3) for v in o2[::step].tolist()],
                "F4": [round(v, 3) for v in f4[::step].tolist()],
            },
        })

        self.t = t1
        if self.t >= self._next_decision_t - 1e-9:
            self._decide()
            self._next_decision_t += cfg.protocol.focus_duration

    def _decide(self) -> None:
        cfg = self.config
        focus = cfg.protocol.focus_duration
        o2 = np.concatenate(self._o2)
        f4 = np.concatenate(self._f4)
        record = EegRecord(
            sample_rate=self.fs,
            channels=(Channel("O2", o2), Channel("F4", f4)),
            markers=tuple(
                MarkerEvent(code=cfg.stimuli.by_id(fl.stimulus_id).marker_code,
                            timestamp=fl.onset)
                for fl in self._flashes
                if fl.onset <= self.t
            ),
        )
        start = max(0.0, self.t - focus)
        window = AnalysisWindow(start=start, end=self.t)
        _, _, fused, latency = decode_window(record, window, cfg.stimuli, cfg.decoder)
        cmd = decision_to_command(fused, cfg.command_map, cfg.low_confidence_policy)
        self.robot = apply_command(self.robot, cmd, timestamp=self.t)
        self.decisions += 1
        self.broadcaster.publish("Decision", self.t, {
            **_decision_doc(fused),
            "command": cmd.value,
            "decode_latency_s": latency,
        })
        self.broadcaster.publish("RobotState", self.t, {
            "x": self.robot.x,
            "y": self.robot.y,
            "heading": self.robot.heading.value,
        })

    async def run(self, realtime: bool = True) -> None:
        while True:
            started = asyncio.get_event_loop().time()
            self.step_block()
            if realtime:
                elapsed = asyncio.get_event_loop().time() - started
                await asyncio.sleep(max(0.0, self.block_duration - elapsed))
            else:
                await asyncio.sleep(0)


def create_app(config: AppConfig | None = None, realtime: bool = True, seed: int = 0) -> FastAPI:
    config = config or AppConfig.default()
    broadcaster = Broadcaster(buffer_frames=config.gateway.buffer_frames)
    pipeline = LivePipeline(config, broadcaster, seed=seed)

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        task = asyncio.create_task(pipeline.run(realtime=realtime))
        yield
        task.cancel()

    app = FastAPI(title="hybridbci gateway", lifespan=lifespan)
    app.state.broadcaster = broadcaster
    app.state.pipeline = pipeline

    @app.get("/healthz")
    async def healthz():
        return {"ok": True, "stream_time": pipeline.t, "decisions": pipeline.decisions}

    @app.get("/config")
    async def get_config():
        return document_of(config)

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        sub = broadcaster.subscribe()
        try:
            while not sub.dead:
                frame = await sub.queue.get()
                await ws.send_text(frame)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            broadcaster.unsubscribe(sub)

    @app.websocket("/gaze")
    async def gaze(ws: WebSocket):
        await ws.accept()
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send_text(json.dumps({"ok": False, "error": "invalid JSON"}))
                    continue
                attend = msg.get("attend")
                if attend == "rest":
                    pipeline.request_attend(REST)
                elif isinstance(attend, int) and attend in config.stimuli.ids:
                    pipeline.request_attend(attend)
                else:
                    await ws.send_text(json.dumps(
                        {"ok": False, "error": f"unknown stimulus id {attend!r}"}
                    ))
                    continue
                await ws.send_text(json.dumps({
                    "ok": True,
                    "attend": attend,
                    "effective_seq": broadcaster.seq + 1,
                }))
        except WebSocketDisconnect:
            pass

    return app
