"""Outbound alert delivery: template-endpoint email POSTs and an SMS sink
(outbox file or webhook), with one retry per message."""

from __future__ import annotations

import json
import logging
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, replace
from pathlib import Path

from ..clock import Clock
from ..config import DispatchConfig
from ..escalation import DispatchPlanEntry, EscalationConfig

log = logging.getLogger(__name__)

MAX_ATTEMPTS = 2


@dataclass(frozen=True)
class OutboundMessage:
    """One message to one destination, with its delivery history."""

    channel: str
    destination: str
    body: str
    attempts: int = 0
    outcomes: tuple[str, ...] = ()

    def __post_init__(self):
        if self.channel not in ("email", "sms"):
            raise ValueError(f"unknown channel {self.channel!r}")
        if self.attempts > MAX_ATTEMPTS:
            raise ValueError(f"attempt count {self.attempts} over limit")

    @property
    def final_outcome(self) -> str:
        return self.outcomes[-1] if self.outcomes else "pending"


class Dispatcher:
    """Delivers planned messages; blocking, intended for worker threads."""

    def __init__(self, config: DispatchConfig, escalation: EscalationConfig, clock: Clock):
        self.config = config
        self.escalation = escalation
        self.clock = clock
        self._outbox_lock = threading.Lock()

    def deliver(self, entry: DispatchPlanEntry, template_params: dict) -> OutboundMessage:
        """Send with one retry; the returned message carries every outcome."""
        msg = OutboundMessage(entry.channel, entry.destination, entry.message)
        for attempt in range(1, MAX_ATTEMPTS + 1):
            try:
                self._send_once(msg, template_params)
                return replace(msg, attempts=attempt, outcomes=msg.outcomes + ("sent",))
            except Exception as exc:
                log.warning("dispatch attempt %d to %s failed: %s", attempt, msg.destination, exc)
                msg = replace(msg, attempts=attempt, outcomes=msg.outcomes + (f"error: {exc}",))
                if attempt < MAX_ATTEMPTS:
                    self.clock.sleep(self.escalation.retry_delay_ms)
        return replace(msg, outcomes=msg.outcomes + ("failed",))

    def _send_once(self, msg: OutboundMessage, template_params: dict) -> None:
        if msg.channel == "email":
            self._send_email(msg, template_params)
        else:
            self._send_sms(msg)

    def _send_email(self, msg: OutboundMessage, template_params: dict) -> None:
        if not self.config.email_url:
            raise RuntimeError("no email endpoint configured")
        body = json.dumps(
            {
                "service_id": self.config.email_service_id,
                "template_id": self.config.email_template_id,
                "user_id": self.config.email_user_id,
                "template_params": template_params,
            }
        ).encode("utf-8")
        request = urllib.request.Request(
            self.config.email_url,
            data=body,
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with urllib.request.urlopen(request, timeout=self.config.email_timeout_s) as resp:
            if not 200 <= resp.status < 300:
                raise RuntimeError(f"email endpoint returned {resp.status}")

    def _send_sms(self, msg: OutboundMessage) -> None:
        if self.config.sms_webhook:
            body = json.dumps({"to": msg.destination, "body": msg.body}).encode("utf-8")
            request = urllib.request.Request(
                self.config.sms_webhook,
                data=body,
                headers={"Content-Type": "application/json"},
                method="POST",
            )
            with urllib.request.urlopen(request, timeout=self.config.email_timeout_s) as resp:
                if not 200 <= resp.status < 300:
                    raise RuntimeError(f"sms webhook returned {resp.status}")
            return
        path = Path(self.config.sms_outbox)
        if path.parent != Path("."):
            path.parent.mkdir(parents=True, exist_ok=True)
        line = f"{self.clock.now_ms()}\t{msg.destination}\t{msg.body}\n"
        with self._outbox_lock:
            with open(path, "a", encoding="utf-8") as fh:
                fh.write(line)
