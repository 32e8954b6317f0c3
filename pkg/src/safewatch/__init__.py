"""Safety-watch emulator: sensor pipelines, telemetry gateway, escalation."""

__version__ = "0.1.0"
