"""Offline detector evaluation over a corpus of labeled traces.

Only accelerometer rows are replayed, with no button responses, so the
numbers measure the detector alone: detection means a fall-labeled trace
reached a confirmed fall, a false alarm means an adl-labeled trace tripped
the impact prompt at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..motion import FallDetectorState, FallEvent, RawAccelSample, calibrate_sample, fall_step
from .trace import AccelRow, TraceFile, read_trace

LABELS = ("fall", "adl")


@dataclass(frozen=True)
class TraceOutcome:
    path: str
    label: str
    prompted: bool
    confirmed: bool


@dataclass(frozen=True)
class CorpusMetrics:
    falls: int
    adls: int
    detected: int
    false_alarms: int
    threshold_g: float

    @property
    def detection_rate(self) -> float:
        return self.detected / self.falls if self.falls else 0.0

    @property
    def false_alarm_rate(self) -> float:
        return self.false_alarms / self.adls if self.adls else 0.0

    def lines(self) -> list[str]:
        return [
            f"threshold_g={self.threshold_g}",
            f"falls={self.falls}",
            f"adls={self.adls}",
            f"detected={self.detected}",
            f"false_alarms={self.false_alarms}",
            f"detection_rate={self.detection_rate:.4f}",
            f"false_alarm_rate={self.false_alarm_rate:.4f}",
        ]


def evaluate_trace(trace: TraceFile, threshold_g: float) -> tuple[bool, bool]:
    """Replay accel rows through the fall pipeline; (prompted, confirmed)."""
    state = FallDetectorState(rms_threshold_g=threshold_g)
    prompted = False
    confirmed = False
    for row in trace.rows:
        if not isinstance(row, AccelRow):
            continue
        g = calibrate_sample(RawAccelSample(row.t_ms, row.x_raw, row.y_raw, row.z_raw))
        state, events = fall_step(state, g, row.t_ms)
        for event in events:
            if event is FallEvent.PROMPT_USER:
                prompted = True
            elif event is FallEvent.FALL_CONFIRMED:
                confirmed = True
    return prompted, confirmed


def evaluate_corpus(paths: list[Path], threshold_g: float) -> CorpusMetrics:
    if not paths:
        raise ValueError("corpus is empty")
    falls = adls = detected = false_alarms = 0
    for path in paths:
        trace = read_trace(path)
        label = trace.header.get("label")
        if label not in LABELS:
            raise ValueError(f"{path}: label must be one of {LABELS}, got {label!r}")
        prompted, confirmed = evaluate_trace(trace, threshold_g)
        if label == "fall":
            falls += 1
            detected += confirmed
        else:
            adls += 1
            false_alarms += prompted
    return CorpusMetrics(
        falls=falls,
        adls=adls,
        detected=detected,
        false_alarms=false_alarms,
        threshold_g=threshold_g,
    )


def evaluate_directory(corpus_dir: str | Path, threshold_g: float) -> CorpusMetrics:
    paths = sorted(Path(corpus_dir).glob("*.trace"))
    return evaluate_corpus(paths, threshold_g)
