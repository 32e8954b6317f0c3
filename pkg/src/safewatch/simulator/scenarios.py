"""Deterministic labeled scenarios rendered into raw sensor traces.

Each scenario scripts three signal tracks (gravity vector, heart rate plus
red/IR modulation ratio, position) and bakes button presses into the trace.
Generation inverts the device calibration so the raw counts, once run back
through the real pipelines, land where the script intended: fall impacts
clear the detection threshold with margin, daily activity stays well under
it, and the modulation ratio maps straight onto the scripted SpO2.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from ..gps import GeoFix, fix_to_gga
from ..motion import X_CAL, Y_CAL, Z_CAL, AxisCalibration
from .trace import AccelRow, ButtonRow, NmeaRow, PpgRow, TraceFile, TraceRow

ACCEL_INTERVAL_MS = 20  # 50 Hz, t = 0 mod 20
PPG_INTERVAL_MS = 40  # 25 Hz, t = 7 mod 40
GPS_INTERVAL_MS = 1000  # 1 Hz, t = 13 mod 1000
PPG_OFFSET_MS = 7
GPS_OFFSET_MS = 13

# The stream phase offsets keep row timestamps disjoint: accel times are
# even, PPG ends in 7, GPS in 3, and button presses are scripted to end in 5.

IR_DC = 50000.0
RED_DC = 40000.0
IR_MODULATION = 0.06

BASE_LAT = 48.1173
BASE_LON = 11.5167


class UnknownScenario(ValueError):
    """Scenario name not in the catalogue."""


@dataclass(frozen=True)
class MotionSegment:
    """Wearer posture and activity until the given time."""

    until_ms: int
    base: tuple[float, float, float]
    sway_g: float = 0.0
    sway_hz: float = 0.0
    jitter_g: float = 0.0


@dataclass(frozen=True)
class VitalsSegment:
    """Heart rate and red/IR modulation ratio until the given time.

    SpO2 seen by the pipeline is 110 - 25*ratio, so ratio 0.5 reads 97.5%
    and ratio 0.8 reads 90%.
    """

    until_ms: int
    bpm: float
    ratio: float


@dataclass(frozen=True)
class Impact:
    """A flat-top acceleration spike overriding the motion track."""

    at_ms: int
    duration_ms: int = 200
    peak_g: float = 3.2
    direction: tuple[float, float, float] = (0.55, 0.2, -0.81)


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    duration_ms: int
    label: str
    motion: tuple[MotionSegment, ...]
    vitals: tuple[VitalsSegment, ...]
    impact: Impact | None = None
    presses: tuple[tuple[int, str], ...] = ()
    gps: bool = True


SCENARIO_NAMES = (
    "adl-walk",
    "fall-forward",
    "fall-recovered",
    "desat",
    "desat-ack",
    "brady",
    "supine-sleep",
    "panic",
)

_UPRIGHT = (1.0, 0.0, 0.0)
_SUPINE = (0.0, 0.0, 1.0)
_PRONE = (0.0, 0.0, -1.0)


def _fall_scenario(name: str, seed: int, presses: tuple[tuple[int, str], ...]) -> Scenario:
    return Scenario(
        name=name,
        seed=seed,
        duration_ms=24_000,
        label="fall",
        motion=(
            MotionSegment(2_000, _UPRIGHT, sway_g=0.15, sway_hz=1.2, jitter_g=0.05),
            MotionSegment(24_000, _PRONE, jitter_g=0.03),
        ),
        vitals=(VitalsSegment(24_000, 75, 0.5),),
        impact=Impact(at_ms=2_000),
        presses=presses,
    )


def _desat_scenario(name: str, seed: int, presses: tuple[tuple[int, str], ...]) -> Scenario:
    return Scenario(
        name=name,
        seed=seed,
        duration_ms=40_000,
        label="adl",
        motion=(MotionSegment(40_000, _UPRIGHT, sway_g=0.1, sway_hz=0.8, jitter_g=0.04),),
        vitals=(VitalsSegment(10_000, 72, 0.5), VitalsSegment(40_000, 72, 0.8)),
        presses=presses,
    )


def build(name: str, seed: int) -> Scenario:
    """Look up a scenario by name; same (name, seed) always builds the same one."""
    if name == "adl-walk":
        return Scenario(
            name=name,
            seed=seed,
            duration_ms=60_000,
            label="adl",
            motion=(
                MotionSegment(60_000, _UPRIGHT, sway_g=0.35, sway_hz=1.9, jitter_g=0.08),
            ),
            vitals=(VitalsSegment(60_000, 72, 0.5),),
        )
    if name == "fall-forward":
        return _fall_scenario(name, seed, presses=())
    if name == "fall-recovered":
        # One confirm press 3 s after the scripted impact dismisses the fall.
        return _fall_scenario(name, seed, presses=((5_005, "a"),))
    if name == "desat":
        return _desat_scenario(name, seed, presses=())
    if name == "desat-ack":
        # Answer the vitals prompt well inside the 60 s acknowledgment window.
        return _desat_scenario(name, seed, presses=((25_005, "a"),))
    if name == "brady":
        return Scenario(
            name=name,
            seed=seed,
            duration_ms=40_000,
            label="adl",
            motion=(MotionSegment(40_000, _UPRIGHT, sway_g=0.05, sway_hz=0.4, jitter_g=0.03),),
            vitals=(VitalsSegment(40_000, 40, 0.5),),
        )
    if name == "supine-sleep":
        return Scenario(
            name=name,
            seed=seed,
            duration_ms=60_000,
            label="adl",
            motion=(MotionSegment(60_000, _SUPINE, sway_g=0.02, sway_hz=0.25, jitter_g=0.03),),
            vitals=(VitalsSegment(60_000, 58, 0.52),),
        )
    if name == "panic":
        return Scenario(
            name=name,
            seed=seed,
            duration_ms=20_000,
            label="adl",
            motion=(MotionSegment(20_000, _UPRIGHT, sway_g=0.3, sway_hz=1.7, jitter_g=0.07),),
            vitals=(VitalsSegment(20_000, 80, 0.5),),
            presses=((5_005, "b"), (5_405, "b")),
        )
    raise UnknownScenario(f"unknown scenario {name!r}; known: {', '.join(SCENARIO_NAMES)}")


def raw_from_g(g: float, cal: AxisCalibration) -> int:
    """Invert the axis calibration: acceleration in g to a 10-bit count."""
    mapped = round(g * cal.divisor)
    span = cal.in_hi - cal.in_lo
    raw = cal.in_lo + round((mapped + 100) * span / 200)
    return max(0, min(1023, raw))


def _segment_at(segments, t_ms):
    for segment in segments:
        if t_ms < segment.until_ms:
            return segment
    return segments[-1]


def _unit(v: tuple[float, float, float]) -> tuple[float, float, float]:
    norm = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    return (v[0] / norm, v[1] / norm, v[2] / norm)


def _accel_rows(scenario: Scenario) -> list[AccelRow]:
    rng = random.Random(f"{scenario.name}:{scenario.seed}:accel")
    impact = scenario.impact
    spike_dir = _unit(impact.direction) if impact else None
    rows = []
    for t in range(0, scenario.duration_ms, ACCEL_INTERVAL_MS):
        if impact and impact.at_ms <= t < impact.at_ms + impact.duration_ms:
            v = [axis * impact.peak_g + rng.uniform(-0.04, 0.04) for axis in spike_dir]
        else:
            seg = _segment_at(scenario.motion, t)
            v = list(seg.base)
            if seg.sway_g:
                phase = 2.0 * math.pi * seg.sway_hz * (t / 1000.0)
                dominant = max(range(3), key=lambda i: abs(seg.base[i]))
                v[(dominant + 1) % 3] += seg.sway_g * math.sin(phase)
                v[(dominant + 2) % 3] += 0.5 * seg.sway_g * math.sin(1.7 * phase + 1.0)
            if seg.jitter_g:
                v = [axis + rng.uniform(-seg.jitter_g, seg.jitter_g) for axis in v]
        rows.append(
            AccelRow(t, raw_from_g(v[0], X_CAL), raw_from_g(v[1], Y_CAL), raw_from_g(v[2], Z_CAL))
        )
    return rows


def _ppg_rows(scenario: Scenario) -> list[PpgRow]:
    rows = []
    phase = 0.0
    previous_ms = PPG_OFFSET_MS
    for t in range(PPG_OFFSET_MS, scenario.duration_ms, PPG_INTERVAL_MS):
        seg = _segment_at(scenario.vitals, t)
        phase += 2.0 * math.pi * (seg.bpm / 60.0) * ((t - previous_ms) / 1000.0)
        previous_ms = t
        pulse = math.sin(phase)
        ir = IR_DC * (1.0 + IR_MODULATION * pulse)
        red = RED_DC * (1.0 + IR_MODULATION * seg.ratio * pulse)
        rows.append(PpgRow(t, int(round(ir)), int(round(red))))
    return rows


def _gps_rows(scenario: Scenario) -> list[NmeaRow]:
    if not scenario.gps:
        return []
    rng = random.Random(f"{scenario.name}:{scenario.seed}:gps")
    rows = []
    for t in range(GPS_OFFSET_MS, scenario.duration_ms, GPS_INTERVAL_MS):
        lat = BASE_LAT + rng.uniform(-2e-5, 2e-5)
        lon = BASE_LON + rng.uniform(-2e-5, 2e-5)
        sentence = fix_to_gga(GeoFix(t, lat, lon, True, "sim")).render()
        rows.append(NmeaRow(t, sentence))
    return rows


def generate(scenario: Scenario) -> TraceFile:
    """Render a scenario to its trace; deterministic in (name, seed)."""
    rows: list[TraceRow] = []
    rows.extend(_accel_rows(scenario))
    rows.extend(_ppg_rows(scenario))
    rows.extend(_gps_rows(scenario))
    for t, button in scenario.presses:
        if t % 10 != 5:
            raise ValueError(f"press at {t} would collide with a sample timestamp")
        rows.append(ButtonRow(t, button))
    rows.sort(key=lambda row: row.t_ms)
    header = {
        "scenario": scenario.name,
        "seed": scenario.seed,
        "label": scenario.label,
        "duration_ms": scenario.duration_ms,
        "accel_hz": 1000 // ACCEL_INTERVAL_MS,
        "ppg_hz": 1000 // PPG_INTERVAL_MS,
        "gps_hz": 1 if scenario.gps else 0,
    }
    return TraceFile(header=header, rows=tuple(rows))
