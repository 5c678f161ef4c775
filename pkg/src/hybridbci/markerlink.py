"""Wire codec for the event-marker serial link.

Frames are ASCII lines "M,<code>,<timestamp_us>\\n". A bare numeric line
(just the code) is accepted as a compatibility format from firmware that
sends only the marker value; its timestamp decodes as 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .model import MarkerEvent

MAX_CODE = 9999
MAX_LINE_BYTES = 64
BITS_PER_BYTE_8N1 = 10  # start + 8 data + stop


def encode_marker(event: MarkerEvent) -> bytes:
    if not (0 < event.code <= MAX_CODE):
        raise ValueError(f"marker code {event.code} out of range (1..{MAX_CODE})")
    if event.timestamp < 0:
        raise ValueError("timestamp must be non-negative")
    timestamp_us = round(event.timestamp * 1_000_000)
    return f"M,{event.code},{timestamp_us}\n".encode("ascii")


@dataclass(frozen=True)
class ParseDiagnostic:
    offset: int     # byte offset of the offending line start in the whole stream
    reason: str


@dataclass
class MarkerParser:
    """Incremental line parser; tolerant of arbitrary chunk boundaries.

    Malformed lines yield a diagnostic and are skipped; the parser
    resynchronizes at the next newline. Buffered partial lines are bounded
    at MAX_LINE_BYTES.
    """

    _buffer: bytearray = field(default_factory=bytearray)
    _consumed: int = 0          # bytes fully consumed from the stream so far
    _overflowed: bool = False   # current partial line already exceeded the limit

    def feed(self, chunk: bytes) -> tuple[list[MarkerEvent], list[ParseDiagnostic]]:
        events: list[MarkerEvent] = []
        diagnostics: list[ParseDiagnostic] = []
        self._buffer.extend(chunk)

        while True:
            idx = self._buffer.find(b"\n")
            if idx < 0:
                break
            line = bytes(self._buffer[:idx])
            del self._buffer[: idx + 1]
            line_offset = self._consumed
            self._consumed += idx + 1
            if self._overflowed:
                # tail of a line that was already reported as too long
                self._overflowed = False
                continue
            result = self._parse_line(line)
            if isinstance(result, MarkerEvent):
                events.append(result)
            elif result is not None:
                diagnostics.append(ParseDiagnostic(offset=line_offset, reason=result))

        if not self._overflowed and len(self._buffer) > MAX_LINE_BYTES:
            diagnostics.append(
                ParseDiagnostic(
                    offset=self._consumed,
                    reason=f"line exceeds {MAX_LINE_BYTES} bytes, resyncing at next newline",
                )
            )
            self._consumed += len(self._buffer)
            self._buffer.clear()
            self._overflowed = True

        return events, diagnostics

    @staticmethod
    def _parse_line(line: bytes) -> MarkerEvent | str | None:
        if not line:
            return None  # blank lines are ignored silently
        if len(line) > MAX_LINE_BYTES:
            return f"line exceeds {MAX_LINE_BYTES} bytes"
        try:
            text = line.decode("ascii")
        except UnicodeDecodeError:
            return "non-ASCII bytes"
        if text.isdigit():
            # compatibility mode: code-only line, no transmitter timestamp
            code = int(text)
            if not (0 < code <= MAX_CODE):
                return f"code {code} out of range"
            return MarkerEvent(code=code, timestamp=0.0)
        parts = text.split(",")
        if len(parts) != 3 or parts[0] != "M":
            return f"malformed frame {text!r}"
        if not parts[1].isdigit() or not parts[2].isdigit():
            return f"non-numeric fields in {text!r}"
        code = int(parts[1])
        if not (0 < code <= MAX_CODE):
            return f"code {code} out of range"
        timestamp_us = int(parts[2])
        return MarkerEvent(code=code, timestamp=timestamp_us / 1_000_000)


def feed_bytes(
    parser: MarkerParser, chunk: bytes
) -> tuple[MarkerParser, list[MarkerEvent], list[ParseDiagnostic]]:
    """Functional wrapper over MarkerParser.feed (parser is mutated and returned)."""
    events, diagnostics = parser.feed(chunk)
    return parser, events, diagnostics


def link_budget(frame: bytes, baud: float) -> float:
    """Transmission time of a frame over an 8N1 serial line."""
    if baud <= 0:
        raise ValueError("baud must be positive")
    return BITS_PER_BYTE_8N1 * len(frame) / baud
