"""Accelerometer pipeline: ADC calibration, tilt orientation, RMS impact
detection, and the fall state machine with its confirmation window."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

# Angle scale kept at the firmware's literal value; using math.pi here would
# shift results by up to a degree and break byte-level compatibility.
_DEG_SCALE = 180.0 / 3.14


def _trunc_div(a: int, b: int) -> int:
    # C-style integer division truncates toward zero; Python // floors.
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


@dataclass(frozen=True)
class RawAccelSample:
    """One raw accelerometer reading in 10-bit ADC counts."""

    t_ms: int
    x_raw: int
    y_raw: int
    z_raw: int


@dataclass(frozen=True)
class AxisCalibration:
    """Linear count-to-g mapping for one axis.

    in_lo/in_hi are the counts observed at the -1g/+1g extremes; divisor
    (+100 or -100) fixes the sign convention of the axis.
    """

    in_lo: int
    in_hi: int
    divisor: int

    def __post_init__(self):
        if self.in_lo >= self.in_hi:
            raise ValueError(f"in_lo must be below in_hi, got {self.in_lo} >= {self.in_hi}")
        if self.divisor not in (-100, 100):
            raise ValueError(f"divisor must be -100 or +100, got {self.divisor}")


# Factory defaults for the three axes (counts at the gravity extremes).
X_CAL = AxisCalibration(269, 404, -100)
Y_CAL = AxisCalibration(265, 403, -100)
Z_CAL = AxisCalibration(268, 403, 100)


@dataclass(frozen=True)
class GVector:
    """Acceleration in g per axis."""

    xg: float
    yg: float
    zg: float

    def __post_init__(self):
        for v in (self.xg, self.yg, self.zg):
            if not math.isfinite(v):
                raise ValueError(f"acceleration must be finite, got {v}")
            if abs(v) > 16.0:
                raise ValueError(f"acceleration beyond sensor range: {v} g")


@dataclass(frozen=True)
class OrientationAngles:
    """Tilt angles in integer degrees, each in [0, 360]."""

    roll: int
    pitch: int
    yaw: int


def calibrate_axis(raw: int, cal: AxisCalibration) -> float:
    """Map a raw ADC count to acceleration in g.

    Integer-maps [in_lo, in_hi] onto [-100, 100] with truncating division
    (extrapolating outside the range, no clamp), then divides by the signed
    axis divisor.
    """
    mapped = _trunc_div((raw - cal.in_lo) * 200, cal.in_hi - cal.in_lo) - 100
    return mapped / float(cal.divisor)


def calibrate_sample(
    sample: RawAccelSample,
    x_cal: AxisCalibration = X_CAL,
    y_cal: AxisCalibration = Y_CAL,
    z_cal: AxisCalibration = Z_CAL,
) -> GVector:
    return GVector(
        calibrate_axis(sample.x_raw, x_cal),
        calibrate_axis(sample.y_raw, y_cal),
        calibrate_axis(sample.z_raw, z_cal),
    )


def _tilt_degrees(num: float, den: float) -> int:
    # atan2(0, 0) == 0.0 in CPython, same convention as the C library.
    deg = int((math.atan2(num, den) * _DEG_SCALE))
    return min(360, max(0, deg + 180))


def orientation(g: GVector) -> OrientationAngles:
    """Roll/pitch/yaw from the gravity direction.

    Truncation happens before the +180 shift; the 180/3.14 scale overshoots
    true degrees slightly, so results are clamped into [0, 360].
    """
    return OrientationAngles(
        roll=_tilt_degrees(g.yg, g.zg),
        pitch=_tilt_degrees(g.zg, g.xg),
        yaw=_tilt_degrees(g.xg, g.yg),
    )


def rms_accel(g: GVector) -> float:
    """Root mean square over the three axis accelerations."""
    return math.sqrt((g.xg * g.xg + g.yg * g.yg + g.zg * g.zg) / 3.0)


class SleepPosition(Enum):
    SUPINE = "supine"
    PRONE = "prone"
    LEFT_SIDE = "left_side"
    RIGHT_SIDE = "right_side"
    UPRIGHT = "upright"


def sleep_position(o: OrientationAngles) -> SleepPosition:
    """Classify lying posture from tilt angles.

    Each angle compares one axis pair (roll: y vs z, pitch: z vs x, yaw: x vs
    y), so dominance needs two bands: a 45-degree sector in one angle plus the
    complementary sector in another. z up/down -> supine/prone, y -> sides,
    otherwise the watch is upright (x along gravity or nothing dominant).
    """
    z_up = 225 <= o.pitch <= 315
    z_down = 45 <= o.pitch <= 135
    y_beats_z = 225 <= o.roll <= 315 or 45 <= o.roll <= 135
    x_beats_y = 225 <= o.yaw <= 315 or 45 <= o.yaw <= 135

    if z_up and not y_beats_z:
        return SleepPosition.SUPINE
    if z_down and not y_beats_z:
        return SleepPosition.PRONE
    if not x_beats_y:
        if 225 <= o.roll <= 315:
            return SleepPosition.LEFT_SIDE
        if 45 <= o.roll <= 135:
            return SleepPosition.RIGHT_SIDE
    return SleepPosition.UPRIGHT


class FallPhase(Enum):
    MONITORING = "monitoring"
    CANDIDATE = "candidate_fall"
    AWAITING_CONFIRMATION = "awaiting_confirmation"
    CONFIRMED = "confirmed"
    CLEARED = "cleared"


class FallEvent(Enum):
    PROMPT_USER = "prompt_user"
    FALL_DISMISSED = "fall_dismissed"
    FALL_CONFIRMED = "fall_confirmed"


@dataclass(frozen=True)
class FallDetectorState:
    """Fall detector: impact trips a candidate, the wearer has a confirmation
    window to press OK, silence confirms the fall."""

    rms_threshold_g: float = 1.4
    confirm_window_ms: int = 15000
    cooldown_ms: int = 120000
    phase: FallPhase = FallPhase.MONITORING
    detected_at_ms: int = 0
    deadline_ms: int = 0
    phase_since_ms: int = 0

    def __post_init__(self):
        if self.rms_threshold_g <= 0:
            raise ValueError("rms threshold must be positive")
        if self.confirm_window_ms <= 0 or self.cooldown_ms < 0:
            raise ValueError("windows must be positive")


def fall_step(
    state: FallDetectorState,
    sample: GVector,
    now_ms: int,
    ok_pressed: bool = False,
) -> tuple[FallDetectorState, list[FallEvent]]:
    """Advance the fall detector by one sample (or button press).

    An impact above threshold lands in CandidateFall and emits PromptUser; the
    next step arms the confirmation window (deadline fixed at detection time).
    OK at or before the deadline dismisses, the deadline passing confirms.
    Confirmed/Cleared sit out a cooldown before monitoring resumes.
    """
    events: list[FallEvent] = []
    phase = state.phase

    if phase in (FallPhase.CONFIRMED, FallPhase.CLEARED):
        if now_ms - state.phase_since_ms >= state.cooldown_ms:
            phase = FallPhase.MONITORING
            state = replace(state, phase=phase, phase_since_ms=now_ms)

    if phase is FallPhase.CANDIDATE:
        phase = FallPhase.AWAITING_CONFIRMATION
        state = replace(state, phase=phase)

    if phase is FallPhase.MONITORING:
        if rms_accel(sample) > state.rms_threshold_g:
            events.append(FallEvent.PROMPT_USER)
            state = replace(
                state,
                phase=FallPhase.CANDIDATE,
                detected_at_ms=now_ms,
                deadline_ms=now_ms + state.confirm_window_ms,
                phase_since_ms=now_ms,
            )
        return state, events

    if phase is FallPhase.AWAITING_CONFIRMATION:
        if ok_pressed and now_ms <= state.deadline_ms:
            events.append(FallEvent.FALL_DISMISSED)
            return replace(state, phase=FallPhase.CLEARED, phase_since_ms=now_ms), events
        if now_ms > state.deadline_ms:
            events.append(FallEvent.FALL_CONFIRMED)
            return replace(state, phase=FallPhase.CONFIRMED, phase_since_ms=now_ms), events

    return state, events
