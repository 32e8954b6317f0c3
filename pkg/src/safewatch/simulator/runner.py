"""Streams a trace to a gateway over TCP, paced by a scalable clock.

The runner walks rows in timestamp order, sleeping in simulated time until
each row is due, and polls the socket between rows so display prompts from
the gateway reach the device model promptly. A lost connection produces a
partial report with the error recorded instead of an exception.
"""

from __future__ import annotations

import select
import socket

from ..clock import Clock, ScaledClock
from .device import DeviceModel, SessionReport
from .trace import TraceFile

POLL_SLICE_MS = 50
CONNECT_TIMEOUT_S = 5.0
SEND_TIMEOUT_S = 5.0
LINGER_MS = 2000


def _poll_inbound(sock: socket.socket, device: DeviceModel, now_ms: int) -> bool:
    """Drain whatever the gateway sent; False when the peer closed."""
    while True:
        readable, _, _ = select.select([sock], [], [], 0)
        if not readable:
            return True
        data = sock.recv(4096)
        if not data:
            return False
        device.on_inbound(data, now_ms)


def run(
    trace: TraceFile,
    host: str,
    port: int,
    speed: float = 1.0,
    clock: Clock | None = None,
    linger_ms: int = LINGER_MS,
) -> SessionReport:
    """Play the trace against a live gateway; returns the session report."""
    if speed <= 0:
        raise ValueError("speed must be positive")
    device = DeviceModel(trace.header)
    report = device.report
    if clock is None:
        clock = ScaledClock(speed)
    try:
        sock = socket.create_connection((host, port), timeout=CONNECT_TIMEOUT_S)
    except OSError as exc:
        report.error = f"connect failed: {exc}"
        return report
    sock.settimeout(SEND_TIMEOUT_S)
    start_ms = clock.now_ms()

    def sim_now() -> int:
        return clock.now_ms() - start_ms

    try:
        for row in trace.rows:
            while sim_now() < row.t_ms:
                if not _poll_inbound(sock, device, sim_now()):
                    report.error = "connection lost: gateway closed the stream"
                    return report
                clock.sleep(min(row.t_ms - sim_now(), POLL_SLICE_MS))
            if not _poll_inbound(sock, device, sim_now()):
                report.error = "connection lost: gateway closed the stream"
                return report
            for frame in device.step(row):
                sock.sendall(frame)
        # Stay on the line briefly so trailing prompts are captured.
        end_ms = sim_now() + linger_ms
        while sim_now() < end_ms:
            if not _poll_inbound(sock, device, sim_now()):
                break
            clock.sleep(min(end_ms - sim_now(), POLL_SLICE_MS))
    except OSError as exc:
        report.error = f"connection lost: {exc}"
        return report
    finally:
        try:
            sock.close()
        except OSError:
            pass
    return report
