"""PPG vitals pipeline: beat detection, BPM ring averaging, SpO2 from the
red/IR ratio, and gestation-aware normality checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

from .motion import SleepPosition

RATE_SIZE = 4
SPO2_WINDOW = 100

# Beat detector: exponential DC tracker plus a hysteresis band around zero AC.
DC_ALPHA = 0.95
HYSTERESIS_FRACTION = 0.02


class LowSignalError(ValueError):
    """Channel too flat (or absent) to produce a reading."""


@dataclass(frozen=True)
class PpgSample:
    """One optical sample: IR and red ADC counts."""

    t_ms: int
    ir: int
    red: int

    def __post_init__(self):
        if self.ir < 0 or self.red < 0:
            raise ValueError("PPG counts cannot be negative")


@dataclass(frozen=True)
class BeatState:
    """Beat detector state plus the BPM ring.

    The ring starts zero-filled and the average always divides by the full
    ring length, so early averages are dragged down until the ring fills;
    a deliberate quirk of the original rate code, kept as-is.
    """

    rates: tuple[int, ...] = (0,) * RATE_SIZE
    rate_spot: int = 0
    beat_avg: int = 0
    last_beat_ms: int | None = None
    dc_estimate: float | None = None
    rising: bool = False
    filled: int = 0


def check_for_beat(state: BeatState, sample: PpgSample) -> tuple[BeatState, bool]:
    """True exactly once per cardiac cycle.

    AC = ir - DC with DC tracked exponentially; a beat fires when AC crosses
    down through zero after having exceeded the positive hysteresis band.
    Constant input never produces AC above the band, so no beats.
    """
    if state.dc_estimate is None:
        dc = float(sample.ir)
    else:
        dc = DC_ALPHA * state.dc_estimate + (1.0 - DC_ALPHA) * sample.ir
    ac = sample.ir - dc

    rising = state.rising
    beat = False
    if not rising:
        if ac > HYSTERESIS_FRACTION * dc:
            rising = True
    elif ac <= 0.0:
        beat = True
        rising = False

    state = replace(
        state,
        dc_estimate=dc,
        rising=rising,
        last_beat_ms=sample.t_ms if beat else state.last_beat_ms,
    )
    return state, beat


def bpm_from_delta(delta_ms: int) -> int | None:
    """BPM from the gap between beats; None when outside the accepted band.

    Gate is strict on both sides (20 < bpm < 255); accepted values are
    truncated to an integer for byte-sized ring storage.
    """
    if delta_ms <= 0:
        raise ValueError(f"beat interval must be positive, got {delta_ms}")
    bpm = 60.0 / (delta_ms / 1000.0)
    if not (20.0 < bpm < 255.0):
        return None
    return int(bpm)


def update_average(state: BeatState, bpm: int) -> BeatState:
    """Store a gated BPM in the ring and refresh the truncating mean."""
    rates = list(state.rates)
    rates[state.rate_spot] = bpm & 0xFF
    spot = (state.rate_spot + 1) % len(rates)
    avg = sum(rates) // len(rates)
    return replace(
        state,
        rates=tuple(rates),
        rate_spot=spot,
        beat_avg=avg,
        filled=min(state.filled + 1, len(rates)),
    )


def process_ppg_sample(state: BeatState, sample: PpgSample) -> tuple[BeatState, bool]:
    """One sample through beat detection and, on a beat, the BPM ring."""
    prev_beat_ms = state.last_beat_ms
    state, beat = check_for_beat(state, sample)
    if beat and prev_beat_ms is not None:
        delta = sample.t_ms - prev_beat_ms
        if delta > 0:
            bpm = bpm_from_delta(delta)
            if bpm is not None:
                state = update_average(state, bpm)
    return state, beat


def spo2_from_window(samples: Sequence[PpgSample]) -> float:
    """SpO2 percent from a window of paired red/IR samples.

    R = (AC_red/DC_red) / (AC_ir/DC_ir) with DC the window mean and AC the
    RMS about it; SpO2 = 110 - 25*R, clamped to [0, 100], one decimal.
    """
    if len(samples) < SPO2_WINDOW:
        raise ValueError(f"window needs at least {SPO2_WINDOW} samples, got {len(samples)}")

    n = len(samples)
    dc_ir = sum(s.ir for s in samples) / n
    dc_red = sum(s.red for s in samples) / n
    if dc_ir == 0.0 or dc_red == 0.0:
        raise LowSignalError("flat channel: zero DC level")
    ac_ir = math.sqrt(sum((s.ir - dc_ir) ** 2 for s in samples) / n)
    ac_red = math.sqrt(sum((s.red - dc_red) ** 2 for s in samples) / n)
    if ac_ir == 0.0 or ac_red == 0.0:
        raise LowSignalError("flat channel: no pulsatile component")

    r = (ac_red / dc_red) / (ac_ir / dc_ir)
    spo2 = 110.0 - 25.0 * r
    return round(min(100.0, max(0.0, spo2)), 1)


class SignalQuality(Enum):
    GOOD = "good"
    LOW_SIGNAL = "low_signal"


@dataclass(frozen=True)
class VitalsReading:
    """One reported reading; bpm is only trustworthy when quality is GOOD."""

    t_ms: int
    bpm: int
    spo2_pct: float
    quality: SignalQuality

    def __post_init__(self):
        if not 0.0 <= self.spo2_pct <= 100.0:
            raise ValueError(f"spo2 out of range: {self.spo2_pct}")
        if self.quality is SignalQuality.GOOD and not 20 < self.bpm < 255:
            raise ValueError(f"good reading with out-of-band bpm {self.bpm}")


def reading_quality(bpm: int) -> SignalQuality:
    return SignalQuality.GOOD if 20 < bpm < 255 else SignalQuality.LOW_SIGNAL


@dataclass(frozen=True)
class NormalRange:
    """One normality band; spo2 has only a floor."""

    bpm_lo: int = 50
    bpm_hi: int = 115
    spo2_lo: float = 94.0

    def __post_init__(self):
        if self.bpm_lo >= self.bpm_hi:
            raise ValueError(f"bpm_lo must be below bpm_hi, got {self.bpm_lo} >= {self.bpm_hi}")
        if not 80.0 <= self.spo2_lo <= 100.0:
            raise ValueError(f"spo2_lo out of range: {self.spo2_lo}")


@dataclass(frozen=True)
class GestationBand:
    weeks_lo: int
    weeks_hi: int
    normal: NormalRange

    def __post_init__(self):
        if not 0 <= self.weeks_lo <= self.weeks_hi <= 42:
            raise ValueError(f"bad gestation band {self.weeks_lo}..{self.weeks_hi}")


# Supine sleep is flagged from the third trimester on.
SUPINE_RISK_WEEKS = 28


@dataclass(frozen=True)
class PregnancyProfile:
    """Wearer pregnancy status plus the normal-range table.

    Ranges are configuration defaults, not clinical reference values.
    """

    pregnant: bool = False
    gestation_weeks: int = 0
    default_range: NormalRange = field(default_factory=NormalRange)
    bands: tuple[GestationBand, ...] = ()

    def __post_init__(self):
        if not 0 <= self.gestation_weeks <= 42:
            raise ValueError(f"gestation_weeks out of range: {self.gestation_weeks}")

    def active_range(self) -> NormalRange:
        if self.pregnant:
            for band in self.bands:
                if band.weeks_lo <= self.gestation_weeks <= band.weeks_hi:
                    return band.normal
        return self.default_range


@dataclass(frozen=True)
class Classification:
    """Result of checking a reading; empty reasons means normal."""

    reasons: tuple[str, ...] = ()

    @property
    def is_normal(self) -> bool:
        return not self.reasons


def classify_vitals(
    reading: VitalsReading,
    position: SleepPosition | None,
    profile: PregnancyProfile,
) -> Classification:
    """Check a good-quality reading against the wearer's active range.

    Position is optional: the supine rule only applies when posture is known
    and the profile is in the third trimester.
    """
    if reading.quality is not SignalQuality.GOOD:
        raise LowSignalError("low-signal reading is not classifiable")

    rng = profile.active_range()
    reasons: list[str] = []
    if not rng.bpm_lo <= reading.bpm <= rng.bpm_hi:
        reasons.append("bpm")
    if reading.spo2_pct < rng.spo2_lo:
        reasons.append("spo2")
    if (
        profile.pregnant
        and profile.gestation_weeks >= SUPINE_RISK_WEEKS
        and position is SleepPosition.SUPINE
    ):
        reasons.append("position")
    return Classification(tuple(reasons))
