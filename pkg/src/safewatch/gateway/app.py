"""Gateway process assembly: service core, device TCP listener, HTTP API,
and the ticker thread that drives deadline timeouts."""

from __future__ import annotations

import argparse
import logging
import threading
import time
from dataclasses import replace

from ..clock import Clock, ScaledClock, SystemClock
from ..config import GatewayConfig, load_config
from .http_api import ApiServer
from .service import GatewayService
from .tcp import DeviceServer

log = logging.getLogger(__name__)


class Gateway:
    """One runnable gateway: build with a config, start, stop.

    Port 0 in the config picks a free port; the bound ports are exposed as
    tcp_port and http_port once constructed.
    """

    def __init__(self, config: GatewayConfig, clock: Clock | None = None):
        if clock is None:
            clock = (
                SystemClock()
                if config.time_scale == 1.0
                else ScaledClock(config.time_scale)
            )
        self.config = config
        self.clock = clock
        self.service = GatewayService(config, clock)
        self.device_server = DeviceServer(self.service, config.bind, config.tcp_port)
        self.api_server = ApiServer(self.service, config.bind, config.http_port)
        self._stopping = threading.Event()
        self._ticker: threading.Thread | None = None

    @property
    def tcp_port(self) -> int:
        return self.device_server.port

    @property
    def http_port(self) -> int:
        return self.api_server.port

    def start(self) -> None:
        self.device_server.start()
        self.api_server.start()
        self._ticker = threading.Thread(target=self._tick_loop, name="ticker", daemon=True)
        self._ticker.start()

    def _tick_loop(self) -> None:
        # The interval is wall time: at high time_scale the clock runs fast,
        # so deadlines are still caught promptly in scaled time.
        interval_s = self.config.tick_interval_ms / 1000.0
        while not self._stopping.is_set():
            self.service.tick()
            self._stopping.wait(interval_s)

    def stop(self) -> None:
        self._stopping.set()
        if self._ticker is not None:
            self._ticker.join(timeout=2)
        self.device_server.stop()
        self.api_server.stop()
        self.service.close()


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="safewatch-gateway",
        description="Run the wearer-safety gateway: device TCP listener plus dashboard HTTP API.",
    )
    parser.add_argument("--config", help="path to a JSON config file")
    parser.add_argument("--bind", help="address to bind both listeners to")
    parser.add_argument("--tcp-port", type=int, help="device listener port (0 = any free port)")
    parser.add_argument("--http-port", type=int, help="HTTP API port (0 = any free port)")
    parser.add_argument("--data-dir", help="directory for the record log and profiles")
    parser.add_argument("--time-scale", type=float, help="clock speed multiplier")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    config = load_config(args.config) if args.config else GatewayConfig()
    overrides = {
        key: value
        for key, value in (
            ("bind", args.bind),
            ("tcp_port", args.tcp_port),
            ("http_port", args.http_port),
            ("data_dir", args.data_dir),
            ("time_scale", args.time_scale),
        )
        if value is not None
    }
    if overrides:
        config = replace(config, **overrides)

    gateway = Gateway(config)
    gateway.start()
    print(f"device listener on {config.bind}:{gateway.tcp_port}")
    print(f"http api on http://{config.bind}:{gateway.http_port}/v1/devices")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        log.info("shutting down")
    finally:
        gateway.stop()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
