"""Wearer-device simulator: trace files, scenario synthesis, replay, scoring."""

from .device import DeviceModel, SessionReport
from .evaluate import CorpusMetrics, evaluate_corpus, evaluate_directory, evaluate_trace
from .runner import run
from .scenarios import SCENARIO_NAMES, Scenario, UnknownScenario, build, generate
from .trace import (
    AccelRow,
    ButtonRow,
    NmeaRow,
    PpgRow,
    TraceError,
    TraceFile,
    read_trace,
    write_trace,
)

__all__ = [
    "AccelRow",
    "ButtonRow",
    "CorpusMetrics",
    "DeviceModel",
    "NmeaRow",
    "PpgRow",
    "SCENARIO_NAMES",
    "Scenario",
    "SessionReport",
    "TraceError",
    "TraceFile",
    "UnknownScenario",
    "build",
    "evaluate_corpus",
    "evaluate_directory",
    "evaluate_trace",
    "generate",
    "read_trace",
    "run",
    "write_trace",
]
