"""TCP listener for wearer devices.

Each connection gets its own reader thread plus a writer thread fed from a
queue, so the service can push display prompts without blocking on a slow
socket while it holds its state lock.
"""

from __future__ import annotations

import logging
import queue
import socket
import threading

from .service import GatewayService

log = logging.getLogger(__name__)


class DeviceServer:
    """Accepts device connections and pumps bytes between socket and service."""

    def __init__(self, service: GatewayService, bind: str = "127.0.0.1", port: int = 0):
        self.service = service
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind((bind, port))
        self._sock.listen()
        self.port = self._sock.getsockname()[1]
        self._conns: set[socket.socket] = set()
        self._conns_lock = threading.Lock()
        self._stopping = threading.Event()
        self._accept_thread: threading.Thread | None = None

    def start(self) -> None:
        self._accept_thread = threading.Thread(
            target=self._accept_loop, name="device-accept", daemon=True
        )
        self._accept_thread.start()
        log.info("device server listening on port %d", self.port)

    def _accept_loop(self) -> None:
        while not self._stopping.is_set():
            try:
                conn, addr = self._sock.accept()
            except OSError:
                break
            with self._conns_lock:
                self._conns.add(conn)
            threading.Thread(
                target=self._serve, args=(conn,), name=f"device-{addr[1]}", daemon=True
            ).start()

    def _serve(self, conn: socket.socket) -> None:
        outbound: queue.Queue = queue.Queue()
        session = self.service.attach_device(send=outbound.put)
        writer = threading.Thread(
            target=self._write_loop, args=(conn, outbound), daemon=True
        )
        writer.start()
        try:
            while True:
                chunk = conn.recv(4096)
                if not chunk:
                    break
                self.service.handle_bytes(session, chunk)
        except OSError:
            pass
        finally:
            self.service.detach_device(session)
            outbound.put(None)
            writer.join(timeout=2)
            with self._conns_lock:
                self._conns.discard(conn)
            try:
                conn.close()
            except OSError:
                pass

    @staticmethod
    def _write_loop(conn: socket.socket, outbound: queue.Queue) -> None:
        while True:
            item = outbound.get()
            if item is None:
                return
            try:
                conn.sendall(item)
            except OSError:
                return

    def stop(self) -> None:
        self._stopping.set()
        try:
            self._sock.close()
        except OSError:
            pass
        with self._conns_lock:
            conns = list(self._conns)
        for conn in conns:
            try:
                conn.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
            try:
                conn.close()
            except OSError:
                pass
