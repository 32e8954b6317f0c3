"""Newline-delimited ASCII framing for the device link: typed frames in both
directions, incremental decoding, and resynchronization after garbage."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

MAX_DISPLAY_TEXT = 11
# The device reads display lines into a fixed 14-byte buffer: "D," + 11 + "\n".
DISPLAY_FRAME_CAP = 14
# Longest legitimate line is ~21 bytes; anything that accumulates past this
# without a newline is garbage and triggers resync.
BUFFER_CAP = 64

_INT_RE = re.compile(rb"^-?[0-9]+$")


class FrameEncodeError(ValueError):
    """Frame field outside its wire range."""


class DisplayTooLong(FrameEncodeError):
    """Display text exceeds the device's fixed read buffer."""


@dataclass(frozen=True)
class Sos:
    pass


@dataclass(frozen=True)
class Fall:
    pass


@dataclass(frozen=True)
class Ok:
    pass


@dataclass(frozen=True)
class Vitals:
    bpm: int
    spo2_tenths: int

    def __post_init__(self):
        if not 0 <= self.bpm <= 255:
            raise FrameEncodeError(f"bpm out of range: {self.bpm}")
        if not 0 <= self.spo2_tenths <= 1000:
            raise FrameEncodeError(f"spo2_tenths out of range: {self.spo2_tenths}")


@dataclass(frozen=True)
class Gps:
    lat_e5: int
    lon_e5: int

    def __post_init__(self):
        if not -90_00000 <= self.lat_e5 <= 90_00000:
            raise FrameEncodeError(f"lat_e5 out of range: {self.lat_e5}")
        if not -180_00000 <= self.lon_e5 <= 180_00000:
            raise FrameEncodeError(f"lon_e5 out of range: {self.lon_e5}")


@dataclass(frozen=True)
class Display:
    text: str

    def __post_init__(self):
        if len(self.text) > MAX_DISPLAY_TEXT:
            raise DisplayTooLong(f"display text over {MAX_DISPLAY_TEXT} chars: {self.text!r}")
        for ch in self.text:
            if not 32 <= ord(ch) < 127 or ch == ",":
                raise FrameEncodeError(f"display text must be printable ASCII without commas: {self.text!r}")


Frame = Union[Sos, Fall, Ok, Vitals, Gps, Display]


def encode(frame: Frame) -> bytes:
    """Render a frame to its newline-terminated wire form."""
    if isinstance(frame, Sos):
        return b"SOS\n"
    if isinstance(frame, Fall):
        return b"FALL\n"
    if isinstance(frame, Ok):
        return b"OK\n"
    if isinstance(frame, Vitals):
        return f"V,{frame.bpm},{frame.spo2_tenths}\n".encode("ascii")
    if isinstance(frame, Gps):
        return f"G,{frame.lat_e5},{frame.lon_e5}\n".encode("ascii")
    if isinstance(frame, Display):
        return f"D,{frame.text}\n".encode("ascii")
    raise TypeError(f"not a frame: {frame!r}")


@dataclass(frozen=True)
class FrameError:
    """One undecodable line; the stream continues past it."""

    line: bytes
    reason: str


@dataclass(frozen=True)
class DecoderState:
    """Incremental decoder state: partial line plus resync bookkeeping."""

    buffer: bytes = b""
    discarded: int = 0
    skipping: bool = False


class _BadLine(Exception):
    def __init__(self, reason: str):
        self.reason = reason


def _int_field(raw: bytes) -> int:
    if not _INT_RE.match(raw):
        raise _BadLine(f"not an integer: {raw!r}")
    return int(raw)


def _parse_line(line: bytes) -> Frame:
    if line == b"SOS":
        return Sos()
    if line == b"FALL":
        return Fall()
    if line == b"OK":
        return Ok()
    try:
        if line.startswith(b"V,"):
            parts = line[2:].split(b",")
            if len(parts) != 2:
                raise _BadLine(f"vitals arity {len(parts)}")
            return Vitals(_int_field(parts[0]), _int_field(parts[1]))
        if line.startswith(b"G,"):
            parts = line[2:].split(b",")
            if len(parts) != 2:
                raise _BadLine(f"gps arity {len(parts)}")
            return Gps(_int_field(parts[0]), _int_field(parts[1]))
        if line.startswith(b"D,"):
            try:
                return Display(line[2:].decode("ascii"))
            except UnicodeDecodeError:
                raise _BadLine("display text not ASCII") from None
    except FrameEncodeError as exc:
        raise _BadLine(str(exc)) from None
    raise _BadLine("unknown frame tag")


def decode_step(
    state: DecoderState, chunk: bytes
) -> tuple[DecoderState, list[Frame], list[FrameError]]:
    """Feed bytes to the decoder; returns completed frames and line errors.

    Never raises on input content. Unterminated input past BUFFER_CAP is
    reported once as an overflow error, then discarded until the next
    newline restores framing.
    """
    frames: list[Frame] = []
    errors: list[FrameError] = []
    discarded = state.discarded
    skipping = state.skipping
    work = state.buffer + bytes(chunk)

    while True:
        nl = work.find(b"\n")
        if nl < 0:
            if skipping:
                discarded += len(work)
                work = b""
            elif len(work) > BUFFER_CAP:
                errors.append(FrameError(work[:BUFFER_CAP], "overflow"))
                discarded += len(work)
                work = b""
                skipping = True
            break
        line, work = work[:nl], work[nl + 1:]
        if skipping:
            discarded += len(line) + 1
            skipping = False
            continue
        if len(line) > BUFFER_CAP:
            errors.append(FrameError(line[:BUFFER_CAP], "overflow"))
            discarded += len(line) + 1
            continue
        try:
            frames.append(_parse_line(line))
        except _BadLine as exc:
            errors.append(FrameError(line, exc.reason))

    return DecoderState(work, discarded, skipping), frames, errors


def decode_all(data: bytes) -> tuple[list[Frame], list[FrameError]]:
    """One-shot decode of a complete byte stream (trailing partial dropped)."""
    _, frames, errors = decode_step(DecoderState(), data)
    return frames, errors
