"""Watch emulation: runs trace rows through the real on-device pipelines.

Accelerometer rows feed the fall detector and posture classifier, PPG rows
feed beat detection and SpO2, position rows are parsed as NMEA, and button
rows act exactly like the hardware buttons (a = confirm/acknowledge,
b = double-press panic). The output is the byte frames the watch would put
on the wire; inbound bytes are decoded for display prompts.
"""

from __future__ import annotations

from collections import Counter, deque
from dataclasses import dataclass, field

from .. import wire
from ..escalation import ButtonState, EscalationConfig, button_step
from ..gps import NmeaError, parse_sentence, to_fix
from ..motion import (
    FallDetectorState,
    FallEvent,
    FallPhase,
    GVector,
    RawAccelSample,
    calibrate_sample,
    fall_step,
    orientation,
    sleep_position,
)
from ..vitals import (
    RATE_SIZE,
    SPO2_WINDOW,
    BeatState,
    LowSignalError,
    PpgSample,
    process_ppg_sample,
    spo2_from_window,
)
from .trace import AccelRow, ButtonRow, NmeaRow, PpgRow, TraceRow


@dataclass
class SessionReport:
    """What one simulated session did, summarized for humans and tests."""

    scenario: str
    label: str
    duration_ms: int
    frames_sent: Counter = field(default_factory=Counter)
    prompts: list[tuple[int, str]] = field(default_factory=list)
    fall_events: list[tuple[int, str]] = field(default_factory=list)
    positions: Counter = field(default_factory=Counter)
    gps_fixes: int = 0
    bad_sentences: int = 0
    button_presses: int = 0
    error: str | None = None

    def lines(self) -> list[str]:
        out = [
            f"scenario={self.scenario}",
            f"label={self.label}",
            f"duration_ms={self.duration_ms}",
        ]
        for tag in sorted(self.frames_sent):
            out.append(f"frames_sent.{tag}={self.frames_sent[tag]}")
        out.append(f"prompts_received={len(self.prompts)}")
        for t_ms, text in self.prompts:
            out.append(f"prompt@{t_ms}={text}")
        for t_ms, event in self.fall_events:
            out.append(f"fall_event@{t_ms}={event}")
        if self.positions:
            dominant = self.positions.most_common(1)[0][0]
            out.append(f"dominant_position={dominant}")
        out.append(f"gps_fixes={self.gps_fixes}")
        out.append(f"button_presses={self.button_presses}")
        out.append(f"error={self.error or 'none'}")
        return out


_FRAME_TAG = {wire.Sos: "SOS", wire.Fall: "FALL", wire.Ok: "OK", wire.Vitals: "V", wire.Gps: "G"}


class DeviceModel:
    """Single-wearer watch state machine driven by trace rows."""

    def __init__(self, header: dict, report_interval_ms: int = 1000):
        self.report = SessionReport(
            scenario=str(header.get("scenario", "unknown")),
            label=str(header.get("label", "unknown")),
            duration_ms=int(header.get("duration_ms", 0)),
        )
        self.report_interval_ms = report_interval_ms
        self.fall_state = FallDetectorState()
        self.beat_state = BeatState()
        self.button_state = ButtonState()
        self.escalation_config = EscalationConfig()
        self.window: deque[PpgSample] = deque(maxlen=SPO2_WINDOW)
        self.last_accel = GVector(0.0, 0.0, 1.0)
        self.next_report_ms = report_interval_ms
        self.decoder = wire.DecoderState()

    # --- outbound ---

    def step(self, row: TraceRow) -> list[bytes]:
        """Advance by one trace row; returns frames to put on the wire."""
        if isinstance(row, AccelRow):
            return self._on_accel(row)
        if isinstance(row, PpgRow):
            return self._on_ppg(row)
        if isinstance(row, NmeaRow):
            return self._on_nmea(row)
        if isinstance(row, ButtonRow):
            return self._on_button(row)
        raise TypeError(f"not a trace row: {row!r}")

    def _emit(self, frame: wire.Frame) -> list[bytes]:
        self.report.frames_sent[_FRAME_TAG[type(frame)]] += 1
        return [wire.encode(frame)]

    def _on_accel(self, row: AccelRow) -> list[bytes]:
        g = calibrate_sample(RawAccelSample(row.t_ms, row.x_raw, row.y_raw, row.z_raw))
        self.last_accel = g
        self.report.positions[sleep_position(orientation(g)).value] += 1
        self.fall_state, events = fall_step(self.fall_state, g, row.t_ms)
        out: list[bytes] = []
        for event in events:
            self.report.fall_events.append((row.t_ms, event.value))
            if event is FallEvent.FALL_CONFIRMED:
                out.extend(self._emit(wire.Fall()))
        return out

    def _on_ppg(self, row: PpgRow) -> list[bytes]:
        sample = PpgSample(row.t_ms, row.ir, row.red)
        self.beat_state, _ = process_ppg_sample(self.beat_state, sample)
        self.window.append(sample)
        if row.t_ms < self.next_report_ms:
            return []
        if self.beat_state.filled < RATE_SIZE or len(self.window) < SPO2_WINDOW:
            return []  # not warmed up yet; try again next interval
        self.next_report_ms = row.t_ms + self.report_interval_ms
        try:
            spo2 = spo2_from_window(list(self.window))
        except LowSignalError:
            return []
        bpm = self.beat_state.beat_avg
        return self._emit(wire.Vitals(bpm=bpm, spo2_tenths=int(round(spo2 * 10))))

    def _on_nmea(self, row: NmeaRow) -> list[bytes]:
        try:
            fix = to_fix(parse_sentence(row.sentence), row.t_ms)
        except NmeaError:
            self.report.bad_sentences += 1
            return []
        if not fix.valid:
            return []
        self.report.gps_fixes += 1
        return self._emit(
            wire.Gps(lat_e5=int(round(fix.lat * 1e5)), lon_e5=int(round(fix.lon * 1e5)))
        )

    def _on_button(self, row: ButtonRow) -> list[bytes]:
        self.report.button_presses += 1
        if row.button == "b":
            self.button_state, panic = button_step(
                self.button_state, row.t_ms, self.escalation_config
            )
            if panic:
                return self._emit(wire.Sos())
            return []
        # Button a: dismiss a pending fall if one is waiting, otherwise the
        # press is the wearer answering the gateway's vitals prompt.
        if self.fall_state.phase in (FallPhase.CANDIDATE, FallPhase.AWAITING_CONFIRMATION):
            self.fall_state, events = fall_step(
                self.fall_state, self.last_accel, row.t_ms, ok_pressed=True
            )
            for event in events:
                self.report.fall_events.append((row.t_ms, event.value))
            return []
        return self._emit(wire.Ok())

    # --- inbound ---

    def on_inbound(self, data: bytes, now_ms: int) -> None:
        """Decode gateway bytes; display prompts land in the report."""
        self.decoder, frames, _errors = wire.decode_step(self.decoder, data)
        for frame in frames:
            if isinstance(frame, wire.Display):
                self.report.prompts.append((now_ms, frame.text))
