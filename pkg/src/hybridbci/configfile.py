"""JSON configuration document: stimuli, protocol, synth, decoder, robot, gateway.

Unknown keys are rejected at every level so typos fail loudly. The schema is
documented in the README and mirrored by `default_document()`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

from .decoder import DecoderParams
from .model import Position, SessionProtocol, Stimulus, StimulusConfig
from .robot import CommandMap, Command, LowConfidencePolicy
from .synth import SynthParams

TOP_LEVEL_KEYS = {"stimuli", "protocol", "synth", "decoder", "robot", "gateway"}


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class GatewaySettings:
    port: int = 8350
    block_samples: int = 32     # EEG samples per streamed block per channel
    buffer_frames: int = 1024   # per-subscriber queue before disconnect


@dataclass(frozen=True)
class AppConfig:
    stimuli: StimulusConfig
    protocol: SessionProtocol
    synth: SynthParams
    decoder: DecoderParams
    command_map: CommandMap
    low_confidence_policy: LowConfidencePolicy
    gateway: GatewaySettings

    @staticmethod
    def default() -> "AppConfig":
        stimuli = StimulusConfig.default()
        return AppConfig(
            stimuli=stimuli,
            protocol=SessionProtocol(),
            synth=SynthParams(),
            decoder=DecoderParams(),
            command_map=CommandMap.default(stimuli),
            low_confidence_policy=LowConfidencePolicy.SUPPRESS,
            gateway=GatewaySettings(),
        )


def _check_keys(obj: dict, allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _build(cls, obj: dict, where: str):
    fields = set(cls.__dataclass_fields__)
    _check_keys(obj, fields, where)
    try:
        return cls(**obj)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from None


def parse_document(doc: dict) -> AppConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    _check_keys(doc, TOP_LEVEL_KEYS, "config")
    defaults = AppConfig.default()

    stimuli = defaults.stimuli
    if "stimuli" in doc:
        entries = doc["stimuli"]
        if not isinstance(entries, list):
            raise ConfigError("'stimuli' must be a list")
        parsed = []
        for i, entry in enumerate(entries):
            _check_keys(entry, {"id", "frequency", "duty_cycle", "position", "marker_code"},
                        f"stimuli[{i}]")
            try:
                parsed.append(Stimulus(
                    id=int(entry["id"]),
                    frequency=float(entry["frequency"]),
                    duty_cycle=float(entry.get("duty_cycle", 0.85)),
                    position=Position(entry["position"]),
                    marker_code=int(entry["marker_code"]),
                ))
            except (KeyError, ValueError) as exc:
                raise ConfigError(f"invalid stimuli[{i}]: {exc}") from None
        stimuli = StimulusConfig(stimuli=tuple(parsed))

    protocol = defaults.protocol
    if "protocol" in doc:
        obj = dict(doc["protocol"])
        if "frequency_order" in obj:
            obj["frequency_order"] = tuple(obj["frequency_order"])
        protocol = _build(SessionProtocol, obj, "protocol")

    synth = defaults.synth
    if "synth" in doc:
        obj = dict(doc["synth"])
        if "ssvep_amplitudes" in obj:
            obj["ssvep_amplitudes"] = tuple(obj["ssvep_amplitudes"])
        synth = _build(SynthParams, obj, "synth")

    decoder = defaults.decoder
    if "decoder" in doc:
        obj = dict(doc["decoder"])
        if "harmonics" in obj:
            obj["harmonics"] = tuple(obj["harmonics"])
        decoder = _build(DecoderParams, obj, "decoder")

    command_map = CommandMap.default(stimuli)
    policy = defaults.low_confidence_policy
    if "robot" in doc:
        obj = doc["robot"]
        _check_keys(obj, {"command_map", "low_confidence_policy"}, "robot")
        if "command_map" in obj:
            try:
                command_map = CommandMap(
                    mapping={int(k): Command(v) for k, v in obj["command_map"].items()}
                )
            except ValueError as exc:
                raise ConfigError(f"invalid robot.command_map: {exc}") from None
        if "low_confidence_policy" in obj:
            try:
                policy = LowConfidencePolicy(obj["low_confidence_policy"])
            except ValueError as exc:
                raise ConfigError(f"invalid robot.low_confidence_policy: {exc}") from None

    gateway = defaults.gateway
    if "gateway" in doc:
        gateway = _build(GatewaySettings, dict(doc["gateway"]), "gateway")

    return AppConfig(
        stimuli=stimuli, protocol=protocol, synth=synth, decoder=decoder,
        command_map=command_map, low_confidence_policy=policy, gateway=gateway,
    )


def load_config(path) -> AppConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    return parse_document(doc)


def default_document() -> dict:
    """The default config rendered as a plain JSON-compatible document."""
    return document_of(AppConfig.default())


def document_of(cfg: AppConfig) -> dict:
    return {
        "stimuli": [
            {
                "id": s.id,
                "frequency": s.frequency,
                "duty_cycle": s.duty_cycle,
                "position": s.position.value,
                "marker_code": s.marker_code,
            }
            for s in cfg.stimuli.stimuli
        ],
        "protocol": {
            "focus_duration": cfg.protocol.focus_duration,
            "rest_duration": cfg.protocol.rest_duration,
            "frequency_order": list(cfg.protocol.frequency_order),
            "sessions": cfg.protocol.sessions,
        },
        "synth": {
            "sample_rate": cfg.synth.sample_rate,
            "ssvep_amplitudes": list(cfg.synth.ssvep_amplitudes),
            "p300_amplitude": cfg.synth.p300_amplitude,
            "p300_latency": cfg.synth.p300_latency,
            "p300_width_sigma": cfg.synth.p300_width_sigma,
            "nontarget_p300_fraction": cfg.synth.nontarget_p300_fraction,
            "noise_white_sigma": cfg.synth.noise_white_sigma,
            "noise_pink_sigma": cfg.synth.noise_pink_sigma,
            "seed": cfg.synth.seed,
        },
        "decoder": {
            "band_halfwidth": cfg.decoder.band_halfwidth,
            "harmonics": list(cfg.decoder.harmonics),
            "filter_order": cfg.decoder.filter_order,
            "edge_trim": cfg.decoder.edge_trim,
            "p300_window": cfg.decoder.p300_window,
            "p300_baseline": cfg.decoder.p300_baseline,
            "p300_min_latency": cfg.decoder.p300_min_latency,
            "fusion_margin_ssvep": cfg.decoder.fusion_margin_ssvep,
            "fusion_margin_p300": cfg.decoder.fusion_margin_p300,
        },
        "robot": {
            "command_map": {str(k): v.value for k, v in cfg.command_map.mapping.items()},
            "low_confidence_policy": cfg.low_confidence_policy.value,
        },
        "gateway": {
            "port": cfg.gateway.port,
            "block_samples": cfg.gateway.block_samples,
            "buffer_frames": cfg.gateway.buffer_frames,
        },
    }
