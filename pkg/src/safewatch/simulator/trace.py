"""Trace files: line-delimited recordings of raw device samples.

One header line carries the scenario metadata as JSON; every following line
is one timestamped sample, kind-tagged so a trace is loadable (and human
readable) without the scenario that generated it:

    #SAFEWATCH-TRACE v1 {"scenario": "fall-forward", ...}
    A,<t_ms>,<x_raw>,<y_raw>,<z_raw>     accelerometer counts
    P,<t_ms>,<ir>,<red>                  pulse-oximeter counts
    N,<t_ms>,<nmea sentence>             position sentence
    B,<t_ms>,<a|b>                       button press (a=confirm, b=panic)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Union

MAGIC = "#SAFEWATCH-TRACE v1"


class TraceError(ValueError):
    """Unreadable or inconsistent trace file."""


@dataclass(frozen=True)
class AccelRow:
    t_ms: int
    x_raw: int
    y_raw: int
    z_raw: int


@dataclass(frozen=True)
class PpgRow:
    t_ms: int
    ir: int
    red: int


@dataclass(frozen=True)
class NmeaRow:
    t_ms: int
    sentence: str


@dataclass(frozen=True)
class ButtonRow:
    t_ms: int
    button: str

    def __post_init__(self):
        if self.button not in ("a", "b"):
            raise TraceError(f"button must be a or b, got {self.button!r}")


TraceRow = Union[AccelRow, PpgRow, NmeaRow, ButtonRow]


@dataclass(frozen=True)
class TraceFile:
    """Header metadata plus rows in strictly increasing time order."""

    header: dict
    rows: tuple[TraceRow, ...]

    def __post_init__(self):
        previous = -1
        for row in self.rows:
            if row.t_ms <= previous:
                raise TraceError(
                    f"timestamps must be strictly increasing, {row.t_ms} after {previous}"
                )
            previous = row.t_ms


def _render_row(row: TraceRow) -> str:
    if isinstance(row, AccelRow):
        return f"A,{row.t_ms},{row.x_raw},{row.y_raw},{row.z_raw}"
    if isinstance(row, PpgRow):
        return f"P,{row.t_ms},{row.ir},{row.red}"
    if isinstance(row, NmeaRow):
        return f"N,{row.t_ms},{row.sentence}"
    if isinstance(row, ButtonRow):
        return f"B,{row.t_ms},{row.button}"
    raise TraceError(f"unknown row type {type(row).__name__}")


def _parse_row(line: str, lineno: int) -> TraceRow:
    try:
        kind, rest = line.split(",", 1)
        if kind == "A":
            t, x, y, z = rest.split(",")
            return AccelRow(int(t), int(x), int(y), int(z))
        if kind == "P":
            t, ir, red = rest.split(",")
            return PpgRow(int(t), int(ir), int(red))
        if kind == "N":
            t, sentence = rest.split(",", 1)
            return NmeaRow(int(t), sentence)
        if kind == "B":
            t, button = rest.split(",")
            return ButtonRow(int(t), button)
    except ValueError as exc:
        raise TraceError(f"line {lineno}: {exc}") from exc
    raise TraceError(f"line {lineno}: unknown row kind {kind!r}")


def dumps(trace: TraceFile) -> str:
    header = json.dumps(trace.header, sort_keys=True)
    lines = [f"{MAGIC} {header}"]
    lines.extend(_render_row(row) for row in trace.rows)
    return "\n".join(lines) + "\n"


def loads(text: str) -> TraceFile:
    lines = text.splitlines()
    if not lines or not lines[0].startswith(MAGIC):
        raise TraceError(f"missing {MAGIC} header line")
    try:
        header = json.loads(lines[0][len(MAGIC):].strip() or "{}")
    except json.JSONDecodeError as exc:
        raise TraceError(f"header is not valid JSON: {exc}") from exc
    if not isinstance(header, dict):
        raise TraceError("header must be a JSON object")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        rows.append(_parse_row(line, lineno))
    return TraceFile(header=header, rows=tuple(rows))


def write_trace(trace: TraceFile, path: str | Path) -> None:
    Path(path).write_text(dumps(trace), encoding="utf-8")


def read_trace(path: str | Path) -> TraceFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise TraceError(f"cannot read trace: {exc}") from exc
    return loads(text)
