"""EDF reader/writer for EEG channels plus an embedded MARKER channel.

Plain EDF: 256-byte fixed header + 256 bytes per signal, ASCII space-padded
fields, 16-bit little-endian samples, record-interleaved signal blocks.
Marker events are written as an extra signal labeled MARKER whose samples
are zero except at the sample nearest each event, which holds the code.

Output is byte-identical across runs: the start date/time is a fixed
constant (or caller-supplied), never the wall clock.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Channel, EegRecord, MarkerEvent

MARKER_LABEL = "MARKER"
DEFAULT_PHYSICAL_RANGE = (-200.0, 200.0)   # µV
DEFAULT_MARKER_RANGE = (0.0, 500.0)
DIGITAL_RANGE = (-32767, 32767)
FIXED_START = ("01.01.00", "00.00.00")  # dd.mm.yy / hh.mm.ss, fixed for reproducibility


class EdfError(Exception):
    pass


class EdfHeaderError(EdfError):
    pass


class EdfTruncatedError(EdfError):
    pass


class EdfValueError(EdfError):
    pass


@dataclass(frozen=True)
class SignalHeader:
    label: str
    transducer: str
    physical_unit: str
    physical_min: float
    physical_max: float
    digital_min: int
    digital_max: int
    prefiltering: str
    samples_per_record: int


@dataclass(frozen=True)
class EdfHeader:
    version: str
    patient_id: str
    recording_id: str
    start_date: str
    start_time: str
    n_records: int
    record_duration: float
    signals: tuple[SignalHeader, ...]

    @property
    def header_bytes(self) -> int:
        return 256 * (len(self.signals) + 1)


def _field(value: str, width: int) -> bytes:
    encoded = value.encode("ascii")
    if len(encoded) > width:
        raise EdfValueError(f"field {value!r} exceeds {width} ASCII bytes")
    return encoded.ljust(width)


def _fmt_number(x: float, width: int = 8) -> str:
    if x == int(x) and abs(x) < 10 ** width:
        s = str(int(x))
    else:
        s = f"{x:.{width - 2}g}"
    if len(s) > width:
        raise EdfValueError(f"number {x} does not fit in {width} ASCII bytes")
    return s


def _choose_records(n_samples: int, sample_rate: float) -> tuple[int, float, int]:
    """(n_records, record_duration, samples_per_record). One-second records
    when they tile the data exactly, otherwise a single record."""
    fs_int = int(sample_rate)
    if sample_rate == fs_int and n_samples % fs_int == 0 and n_samples > 0:
        return n_samples // fs_int, 1.0, fs_int
    return 1, n_samples / sample_rate, n_samples


def write_edf(
    record: EegRecord,
    path,
    physical_range: tuple[float, float] = DEFAULT_PHYSICAL_RANGE,
    marker_range: tuple[float, float] = DEFAULT_MARKER_RANGE,
    patient_id: str = "X",
    recording_id: str = "hybridbci",
    start: tuple[str, str] = FIXED_START,
) -> None:
    pmin, pmax = physical_range
    if pmin >= pmax:
        raise EdfValueError("degenerate physical range")
    dmin, dmax = DIGITAL_RANGE
    n = record.n_samples
    fs = record.sample_rate

    marker_samples = np.zeros(n)
    mmin, mmax = marker_range
    for ev in record.markers:
        idx = min(round(ev.timestamp * fs), n - 1)
        if not (mmin <= ev.code <= mmax):
            raise EdfValueError(f"marker code {ev.code} outside range [{mmin}, {mmax}]")
        if marker_samples[idx] != 0:
            raise EdfValueError(f"two markers map to the same sample index {idx}")
        marker_samples[idx] = ev.code

    n_records, record_duration, spr = _choose_records(n, fs)

    signals: list[tuple[SignalHeader, np.ndarray]] = []
    for ch in record.channels:
        hdr = SignalHeader(
            label=ch.label, transducer="", physical_unit=ch.physical_unit,
            physical_min=pmin, physical_max=pmax,
            digital_min=dmin, digital_max=dmax,
            prefiltering="", samples_per_record=spr,
        )
        bad = np.flatnonzero((ch.samples < pmin) | (ch.samples > pmax))
        if bad.size:
            raise EdfValueError(
                f"channel {ch.label!r} sample {int(bad[0])} = {ch.samples[bad[0]]:g} "
                f"outside physical range [{pmin}, {pmax}]"
            )
        signals.append((hdr, ch.samples))
    marker_hdr = SignalHeader(
        label=MARKER_LABEL, transducer="", physical_unit="",
        physical_min=mmin, physical_max=mmax,
        digital_min=int(mmin), digital_max=int(mmax),
        prefiltering="", samples_per_record=spr,
    )
    signals.append((marker_hdr, marker_samples))

    ns = len(signals)
    out = bytearray()
    out += _field("0", 8)
    out += _field(patient_id, 80)
    out += _field(recording_id, 80)
    out += _field(start[0], 8)
    out += _field(start[1], 8)
    out += _field(str(256 * (ns + 1)), 8)
    out += _field("", 44)
    out += _field(str(n_records), 8)
    out += _field(_fmt_number(record_duration), 8)
    out += _field(str(ns), 4)
    for width, getter in (
        (16, lambda s: s.label),
        (80, lambda s: s.transducer),
        (8, lambda s: s.physical_unit),
        (8, lambda s: _fmt_number(s.physical_min)),
        (8, lambda s: _fmt_number(s.physical_max)),
        (8, lambda s: str(s.digital_min)),
        (8, lambda s: str(s.digital_max)),
        (80, lambda s: s.prefiltering),
        (8, lambda s: str(s.samples_per_record)),
        (32, lambda s: ""),
    ):
        for hdr, _ in signals:
            out += _field(getter(hdr), width)

    digital: list[np.ndarray] = []
    for hdr, samples in signals:
        gain = (hdr.digital_max - hdr.digital_min) / (hdr.physical_max - hdr.physical_min)
        dig = np.rint((samples - hdr.physical_min) * gain + hdr.digital_min)
        digital.append(dig.astype("<i2"))

    for rec in range(n_records):
        lo, hi = rec * spr, (rec + 1) * spr
        for dig in digital:
            out += dig[lo:hi].tobytes()

    with open(path, "wb") as fh:
        fh.write(out)


def _read_fields(raw: bytes, offset: int, width: int, count: int) -> list[str]:
    return [
        raw[offset + i * width : offset + (i + 1) * width].decode("ascii").strip()
        for i in range(count)
    ]


def read_edf(path) -> EegRecord:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 256:
        raise EdfTruncatedError(f"file is {len(raw)} bytes, shorter than the 256-byte header")
    try:
        header_bytes = int(raw[184:192].decode("ascii").strip())
        n_records = int(raw[236:244].decode("ascii").strip())
        record_duration = float(raw[244:252].decode("ascii").strip())
        ns = int(raw[252:256].decode("ascii").strip())
    except (ValueError, UnicodeDecodeError) as exc:
        raise EdfHeaderError(f"malformed fixed header: {exc}") from None
    if header_bytes != 256 * (ns + 1):
        raise EdfHeaderError(
            f"header length field {header_bytes} != 256×({ns}+1)"
        )
    if len(raw) < header_bytes:
        raise EdfTruncatedError("file shorter than the declared header")

    try:
        labels = _read_fields(raw, 256, 16, ns)
        base = 256 + ns * (16 + 80)
        units = _read_fields(raw, base, 8, ns)
        pmins = [float(x) for x in _read_fields(raw, base + ns * 8, 8, ns)]
        pmaxs = [float(x) for x in _read_fields(raw, base + ns * 16, 8, ns)]
        dmins = [int(x) for x in _read_fields(raw, base + ns * 24, 8, ns)]
        dmaxs = [int(x) for x in _read_fields(raw, base + ns * 32, 8, ns)]
        sprs = [int(x) for x in _read_fields(raw, base + ns * 40 + ns * 80, 8, ns)]
    except ValueError as exc:
        raise EdfHeaderError(f"malformed signal header: {exc}") from None

    for i in range(ns):
        if pmins[i] >= pmaxs[i]:
            raise EdfHeaderError(f"degenerate scaling on signal {labels[i]!r}")
        if dmins[i] >= dmaxs[i]:
            raise EdfHeaderError(f"degenerate digital range on signal {labels[i]!r}")

    record_bytes = 2 * sum(sprs)
    expected = header_bytes + n_records * record_bytes
    if len(raw) < expected:
        raise EdfTruncatedError(
            f"truncated: file is {len(raw)} bytes, header claims {expected}"
        )
    if len(raw) > expected:
        raise EdfHeaderError(
            f"inconsistent record sizes: {len(raw) - expected} trailing bytes"
        )

    if record_duration <= 0:
        raise EdfHeaderError("non-positive record duration")
    sample_rate = sprs[0] / record_duration

    per_signal = [np.empty(n_records * sprs[i], dtype=np.float64) for i in range(ns)]
    pos = header_bytes
    for rec in range(n_records):
        for i in range(ns):
            chunk = np.frombuffer(raw, dtype="<i2", count=sprs[i], offset=pos)
            pos += 2 * sprs[i]
            gain = (pmaxs[i] - pmins[i]) / (dmaxs[i] - dmins[i])
            per_signal[i][rec * sprs[i] : (rec + 1) * sprs[i]] = (
                (chunk.astype(np.float64) - dmins[i]) * gain + pmins[i]
            )

    channels: list[Channel] = []
    markers: list[MarkerEvent] = []
    for i in range(ns):
        if labels[i] == MARKER_LABEL:
            nz = np.flatnonzero(np.rint(per_signal[i]) != 0)
            markers = [
                MarkerEvent(code=int(round(per_signal[i][j])), timestamp=j / sample_rate)
                for j in nz
            ]
        else:
            channels.append(Channel(label=labels[i], samples=per_signal[i], physical_unit=units[i]))

    return EegRecord(
        sample_rate=sample_rate,
        channels=tuple(channels),
        markers=tuple(markers),
    )
