"""HTTP API for dashboards: state snapshots, record history, acks, profile
registration, and a server-sent-events stream of the record log.

Every record carries the global sequence number as the SSE event id, so a
client that reconnects with Last-Event-ID (or ?since=) resumes without gaps
or duplicates.
"""

from __future__ import annotations

import json
import logging
import queue
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .service import GatewayService, UnknownCase, ValidationError

log = logging.getLogger(__name__)

HEARTBEAT_S = 1.0

_STATE_RE = re.compile(r"^/v1/devices/([^/]+)/state$")
_RECORDS_RE = re.compile(r"^/v1/devices/([^/]+)/records$")
_ACK_RE = re.compile(r"^/v1/devices/([^/]+)/ack$")


class _Server(ThreadingHTTPServer):
    daemon_threads = True
    allow_reuse_address = True
    service: GatewayService
    stopping: threading.Event


class ApiHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    timeout = 30

    @property
    def service(self) -> GatewayService:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):
        log.debug("http %s", fmt % args)

    # --- plumbing ---

    def _cors(self) -> None:
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID")

    def _send_json(self, status: int, obj) -> None:
        body = json.dumps(obj).encode()
        self.send_response(status)
        self._cors()
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_body(self) -> dict | None:
        """Parse the JSON request body; None (after a 400) when unusable."""
        try:
            length = int(self.headers.get("Content-Length", "0"))
        except ValueError:
            self._send_json(400, {"error": "bad content-length"})
            return None
        raw = self.rfile.read(length) if length > 0 else b""
        if not raw:
            return {}
        try:
            payload = json.loads(raw)
        except json.JSONDecodeError:
            self._send_json(400, {"error": "body is not valid JSON"})
            return None
        if not isinstance(payload, dict):
            self._send_json(400, {"error": "body must be a JSON object"})
            return None
        return payload

    # --- methods ---

    def do_OPTIONS(self):
        self.send_response(204)
        self._cors()
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self):
        url = urlparse(self.path)
        try:
            match = _STATE_RE.match(url.path)
            if match:
                self._send_json(200, self.service.api_get_state(match.group(1)))
                return
            match = _RECORDS_RE.match(url.path)
            if match:
                qs = parse_qs(url.query)
                try:
                    since = int(qs.get("since", ["0"])[0])
                except ValueError:
                    self._send_json(400, {"error": "since must be an integer"})
                    return
                records = self.service.api_get_records(match.group(1), since)
                self._send_json(200, {"records": records})
                return
            if url.path == "/v1/devices":
                self._send_json(200, {"devices": self.service.api_list_devices()})
                return
            if url.path == "/v1/events":
                self._stream_events(url)
                return
            self._send_json(404, {"error": "not found"})
        except (BrokenPipeError, ConnectionResetError):
            pass

    def do_POST(self):
        url = urlparse(self.path)
        payload = self._read_body()
        if payload is None:
            return
        match = _ACK_RE.match(url.path)
        if match:
            case_id = payload.get("case_id")
            if not isinstance(case_id, str) or not case_id:
                self._send_json(400, {"error": "case_id required"})
                return
            try:
                case = self.service.api_post_ack(match.group(1), case_id)
            except UnknownCase:
                self._send_json(404, {"error": f"unknown case {case_id}"})
                return
            self._send_json(200, {"case": case})
            return
        if url.path == "/v1/profile":
            device = payload.pop("device", None)
            if not isinstance(device, str) or not device:
                self._send_json(400, {"error": "device required"})
                return
            try:
                stored = self.service.register_profile(device, payload)
            except ValidationError as exc:
                self._send_json(400, {"error": str(exc)})
                return
            self._send_json(200, {"device": device, "profile": stored})
            return
        self._send_json(404, {"error": "not found"})

    # --- event stream ---

    def _stream_events(self, url) -> None:
        qs = parse_qs(url.query)
        since = 0
        try:
            if "since" in qs:
                since = int(qs["since"][0])
            header = self.headers.get("Last-Event-ID")
            if header:
                since = max(since, int(header))
        except ValueError:
            self._send_json(400, {"error": "since must be an integer"})
            return
        backlog, live = self.service.subscribe(since)
        self.send_response(200)
        self._cors()
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Connection", "close")
        self.close_connection = True
        self.end_headers()
        stopping: threading.Event = self.server.stopping  # type: ignore[attr-defined]
        try:
            for rec in backlog:
                self._write_event(rec)
            while not stopping.is_set():
                try:
                    rec = live.get(timeout=HEARTBEAT_S)
                except queue.Empty:
                    self.wfile.write(b": heartbeat\n\n")
                    self.wfile.flush()
                    continue
                self._write_event(rec)
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            self.service.unsubscribe(live)

    def _write_event(self, rec) -> None:
        data = json.dumps(rec.to_dict(), sort_keys=True)
        self.wfile.write(f"id: {rec.seq}\nevent: record\ndata: {data}\n\n".encode())
        self.wfile.flush()


class ApiServer:
    """Threaded HTTP server wrapper; port 0 picks a free port."""

    def __init__(self, service: GatewayService, bind: str = "127.0.0.1", port: int = 0):
        self._httpd = _Server((bind, port), ApiHandler)
        self._httpd.service = service
        self._httpd.stopping = threading.Event()
        self.port = self._httpd.server_address[1]
        self._thread: threading.Thread | None = None

    def start(self) -> None:
        self._thread = threading.Thread(
            target=self._httpd.serve_forever, name="http-api", daemon=True
        )
        self._thread.start()
        log.info("http api listening on port %d", self.port)

    def stop(self) -> None:
        self._httpd.stopping.set()
        self._httpd.shutdown()
        self._httpd.server_close()
