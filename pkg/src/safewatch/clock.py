"""Injected clocks so every timeout in the system can run on simulated time."""

from __future__ import annotations

import threading
import time


class Clock:
    """Millisecond clock interface. t=0 is clock construction, not wall epoch."""

    def now_ms(self) -> int:
        raise NotImplementedError

    def sleep(self, ms: float) -> None:
        raise NotImplementedError


class SystemClock(Clock):
    """Real time, 1:1."""

    def __init__(self):
        self._t0 = time.monotonic()

    def now_ms(self) -> int:
        return int((time.monotonic() - self._t0) * 1000)

    def sleep(self, ms: float) -> None:
        if ms > 0:
            time.sleep(ms / 1000.0)


class ScaledClock(Clock):
    """Runs `scale` times faster than wall time; sleep(ms) waits ms/scale wall."""

    def __init__(self, scale: float):
        if scale <= 0:
            raise ValueError(f"scale must be positive, got {scale}")
        self.scale = float(scale)
        self._t0 = time.monotonic()

    def now_ms(self) -> int:
        return int((time.monotonic() - self._t0) * 1000 * self.scale)

    def sleep(self, ms: float) -> None:
        if ms > 0:
            time.sleep(ms / 1000.0 / self.scale)


class ManualClock(Clock):
    """Test clock advanced explicitly; sleep() advances it so retry delays
    don't stall unit tests."""

    def __init__(self, start_ms: int = 0):
        self._now = int(start_ms)
        self._lock = threading.Lock()

    def now_ms(self) -> int:
        with self._lock:
            return self._now

    def advance(self, ms: int) -> None:
        if ms < 0:
            raise ValueError("clock cannot go backwards")
        with self._lock:
            self._now += int(ms)

    def sleep(self, ms: float) -> None:
        self.advance(int(ms))
