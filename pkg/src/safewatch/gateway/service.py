"""Gateway core: device sessions, frame handling, case lifecycle, persistence,
and the event feed.

All state changes happen under one lock with timestamps from the injected
clock; every change is appended to the record log before subscribers hear
about it, so restarting the gateway and replaying the log reproduces the
same state.
"""

from __future__ import annotations

import logging
import queue
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

from .. import escalation, vitals, wire
from ..clock import Clock
from ..config import GatewayConfig
from ..escalation import (
    AlertCase,
    CaseCause,
    CasePrompt,
    CaseStatus,
    DispatchPlanEntry,
    DispatchResult,
    Tick,
    UserAck,
    WearerProfile,
)
from ..gps import GeoFix, HttpGeocoder, ProviderUnavailable, ReverseGeocoder, StubGeocoder
from ..motion import FallDetectorState
from ..store import ProfileStore, RecordLog, StoredRecord
from ..vitals import SignalQuality, VitalsReading
from .dispatch import Dispatcher

log = logging.getLogger(__name__)


class UnknownCase(KeyError):
    """Ack addressed to a case id the gateway has never seen."""


class ValidationError(ValueError):
    """Bad profile payload."""


@dataclass
class DeviceSession:
    """Per-connection state; discarded when the connection drops."""

    device_id: str
    connection_id: int
    connected_at_ms: int
    send: Callable[[bytes], None] | None = None
    decoder: wire.DecoderState = field(default_factory=wire.DecoderState)
    fall_state: FallDetectorState = field(default_factory=FallDetectorState)
    frame_errors: int = 0


_PROMPT_TEXT = {
    CasePrompt.SELECT_CONTACTS: "NO CONTACTS",
}
# Shown when a case goes straight to dispatch (panic/fall with contacts)
# or when a vitals case times out and help is called.
_SENT_TEXT = {
    CaseCause.PANIC: "SOS SENT",
    CaseCause.FALL_CONFIRMED: "FALL SENT",
    CaseCause.VITALS_ABNORMAL: "HELP SENT",
}


class GatewayService:
    """Single-process gateway state machine behind the TCP and HTTP servers."""

    def __init__(self, config: GatewayConfig, clock: Clock):
        self.config = config
        self.clock = clock
        data_dir = Path(config.data_dir)
        self.records = RecordLog(data_dir / "records.log")
        self.profile_store = ProfileStore(data_dir / "profiles.json")
        self.dispatcher = Dispatcher(config.dispatch, config.escalation, clock)
        self.geocoder = ReverseGeocoder(self._build_geocoder_client())

        self._lock = threading.RLock()
        self._sessions: dict[int, DeviceSession] = {}
        self._next_connection_id = 1
        self._profiles: dict[str, WearerProfile] = {}
        self._cases: dict[str, AlertCase] = {}
        self._case_order: dict[str, list[str]] = {}
        self._case_counter: dict[str, int] = {}
        self._latest_vitals: dict[str, dict] = {}
        self._latest_fix: dict[str, GeoFix] = {}
        # When a cause was last resolved (dispatched or acknowledged) per
        # device; anchors the duplicate-suppression cooldown.
        self._last_resolution: dict[tuple[str, CaseCause], int] = {}
        self._subscribers: list[queue.Queue] = []
        self._pool = ThreadPoolExecutor(max_workers=4, thread_name_prefix="dispatch")
        self._closed = False

        self._load_profiles()
        self._replay()

    # --- construction helpers ---

    def _build_geocoder_client(self):
        geo = self.config.geocoder
        if geo.mode == "http":
            return HttpGeocoder(geo.url, geo.timeout_s)
        return StubGeocoder(geo.table, geo.default)

    def _load_profiles(self) -> None:
        for device, payload in self.profile_store.load().items():
            try:
                self._profiles[device] = escalation.profile_from_dict(payload)
            except (ValueError, KeyError, TypeError) as exc:
                log.error("skipping bad stored profile for %s: %s", device, exc)

    def _replay(self) -> None:
        """Rebuild live state from the record log; never writes records."""
        for rec in self.records.read_all():
            if rec.kind == "vitals":
                self._latest_vitals[rec.device] = rec.payload
            elif rec.kind == "fix":
                self._latest_fix[rec.device] = escalation.fix_from_dict(rec.payload)
            elif rec.kind == "alert":
                case = escalation.case_from_dict(rec.payload)
                if case.id not in self._cases:
                    self._case_order.setdefault(case.device, []).append(case.id)
                    tail = case.id.rsplit("-c", 1)
                    if len(tail) == 2 and tail[1].isdigit():
                        self._case_counter[case.device] = max(
                            self._case_counter.get(case.device, 0), int(tail[1])
                        )
                self._cases[case.id] = case
                resolved = [
                    t for t in (case.dispatch_began_ms, case.acked_at_ms) if t is not None
                ]
                if resolved:
                    key = (case.device, case.cause)
                    self._last_resolution[key] = max(
                        self._last_resolution.get(key, 0), *resolved
                    )

    # --- session lifecycle (called by the TCP server) ---

    def attach_device(self, send: Callable[[bytes], None] | None = None) -> DeviceSession:
        """Bind a new connection to the lowest free device id from the roster."""
        with self._lock:
            active = {s.device_id for s in self._sessions.values()}
            device_id = next((d for d in self.config.devices if d not in active), None)
            n = len(self.config.devices)
            while device_id is None:
                n += 1
                if f"watch-{n}" not in active:
                    device_id = f"watch-{n}"
            session = DeviceSession(
                device_id=device_id,
                connection_id=self._next_connection_id,
                connected_at_ms=self.clock.now_ms(),
                send=send,
                fall_state=FallDetectorState(
                    rms_threshold_g=self.config.motion.rms_threshold_g,
                    confirm_window_ms=self.config.motion.confirm_window_ms,
                    cooldown_ms=self.config.motion.cooldown_ms,
                ),
            )
            self._next_connection_id += 1
            self._sessions[session.connection_id] = session
            log.info("device %s attached (connection %d)", device_id, session.connection_id)
            return session

    def detach_device(self, session: DeviceSession) -> None:
        with self._lock:
            self._sessions.pop(session.connection_id, None)
        log.info("device %s detached", session.device_id)

    def handle_bytes(self, session: DeviceSession, chunk: bytes) -> None:
        """Decode a chunk and process complete frames in arrival order."""
        session.decoder, frames, errors = wire.decode_step(session.decoder, chunk)
        for err in errors:
            session.frame_errors += 1
            log.warning(
                "device %s frame error: %s (%r)", session.device_id, err.reason, err.line[:40]
            )
        for frame in frames:
            self.handle_frame(session, frame)

    # --- frame processing ---

    def handle_frame(self, session: DeviceSession, frame: wire.Frame) -> None:
        with self._lock:
            now = self.clock.now_ms()
            device = session.device_id
            if isinstance(frame, wire.Vitals):
                self._on_vitals(device, frame, now)
            elif isinstance(frame, wire.Gps):
                self._on_gps(device, frame, now)
            elif isinstance(frame, wire.Sos):
                self._open_case(device, CaseCause.PANIC, (), now)
            elif isinstance(frame, wire.Fall):
                self._open_case(device, CaseCause.FALL_CONFIRMED, (), now)
            elif isinstance(frame, wire.Ok):
                self._on_ok(device, now)
            else:
                log.warning("device %s sent unexpected frame %r", device, frame)

    def _profile_for(self, device: str) -> WearerProfile:
        profile = self._profiles.get(device)
        if profile is not None:
            return profile
        return WearerProfile(
            name=device,
            contacts=(),
            pregnancy=vitals.PregnancyProfile(default_range=self.config.vitals.default_range),
        )

    def _on_vitals(self, device: str, frame: wire.Vitals, now: int) -> None:
        quality = vitals.reading_quality(frame.bpm)
        payload: dict = {
            "bpm": frame.bpm,
            "spo2_pct": frame.spo2_tenths / 10.0,
            "quality": quality.value,
            "classification": None,
        }
        result = None
        if quality is SignalQuality.GOOD:
            reading = VitalsReading(now, frame.bpm, frame.spo2_tenths / 10.0, quality)
            profile = self._profile_for(device)
            # Posture never crosses the wire, so the supine rule is skipped here.
            result = vitals.classify_vitals(reading, None, profile.pregnancy)
            payload["classification"] = {
                "normal": result.is_normal,
                "reasons": list(result.reasons),
            }
        self._latest_vitals[device] = payload
        self._append_record(device, "vitals", now, payload)
        if result is not None and not result.is_normal:
            self._open_case(device, CaseCause.VITALS_ABNORMAL, result.reasons, now)

    def _on_gps(self, device: str, frame: wire.Gps, now: int) -> None:
        fix = GeoFix(now, frame.lat_e5 / 1e5, frame.lon_e5 / 1e5, True, "wire")
        self._latest_fix[device] = fix
        self._append_record(device, "fix", now, escalation.fix_to_dict(fix))

    def _on_ok(self, device: str, now: int) -> None:
        """Route a device OK to the oldest case still waiting on one."""
        target = None
        for case_id in self._case_order.get(device, ()):
            if self._cases[case_id].status is CaseStatus.AWAITING_USER_ACK:
                target = case_id
                break
        if target is not None:
            self._apply_case_event(target, UserAck(at_ms=now))
        self._append_record(device, "ack", now, {"source": "device", "case_id": target})

    # --- case lifecycle ---

    def _open_case(
        self, device: str, cause: CaseCause, reasons: tuple[str, ...], now: int
    ) -> None:
        last_resolution = self._last_resolution.get((device, cause))
        in_cooldown = (
            last_resolution is not None
            and now - last_resolution < self.config.escalation.cooldown_ms
        )
        for case_id in reversed(self._case_order.get(device, ())):
            existing = self._cases[case_id]
            if existing.cause is not cause:
                continue
            if existing.is_open:
                return  # one open case per cause kind; re-triggers are absorbed
            if in_cooldown and existing.status is CaseStatus.SUPPRESSED:
                return  # episode already carries its suppression marker
            break
        profile = self._profile_for(device)
        fix = self._latest_fix.get(device)
        address = None
        if fix is not None and fix.valid:
            try:
                address = self.geocoder.resolve(fix).display
            except ProviderUnavailable as exc:
                log.warning("geocoder unavailable for %s: %s", device, exc)
        count = self._case_counter.get(device, 0) + 1
        self._case_counter[device] = count
        case, prompts = escalation.open_case(
            f"{device}-c{count}",
            device,
            cause,
            reasons,
            now,
            fix,
            address,
            profile,
            self.config.escalation,
            last_resolution,
        )
        plan: list[DispatchPlanEntry] = []
        if case.status is CaseStatus.DISPATCHING:
            case, plan = self._mark_planned(case)
        self._cases[case.id] = case
        self._case_order.setdefault(device, []).append(case.id)
        self._append_record(device, "alert", now, escalation.case_to_dict(case))

        if case.status is CaseStatus.AWAITING_USER_ACK and cause is CaseCause.VITALS_ABNORMAL:
            self._notify_device(device, "VITALS?")
        for prompt in prompts:
            self._notify_device(device, _PROMPT_TEXT[prompt])
        if case.status is CaseStatus.DISPATCHING:
            self._notify_device(device, _SENT_TEXT[cause])
            self._last_resolution[(device, cause)] = now
            self._submit_plan(case, plan)

    def _mark_planned(self, case: AlertCase) -> tuple[AlertCase, list[DispatchPlanEntry]]:
        """Stamp the case with the (contact, channel) set dispatch must cover."""
        profile = self._profile_for(case.device)
        plan = escalation.plan_dispatch(case, profile.contacts)
        planned = tuple((e.contact.name, e.channel) for e in plan)
        return replace(case, planned=planned), plan

    def _submit_plan(self, case: AlertCase, plan: list[DispatchPlanEntry]) -> None:
        """Fan planned messages out to worker threads; results feed back in."""
        params = {
            "name": case.wearer,
            "cause": escalation.cause_text(case),
            "time": str(case.opened_at_ms),
            "location": escalation.location_text(case),
        }
        for entry in plan:
            self._pool.submit(self._deliver_entry, case.id, entry, params)

    def _deliver_entry(self, case_id: str, entry: DispatchPlanEntry, params: dict) -> None:
        try:
            msg = self.dispatcher.deliver(entry, params)
            outcome = escalation.DispatchOutcome(
                contact=entry.contact.name,
                channel=entry.channel,
                destination=entry.destination,
                outcome=msg.final_outcome,
                attempts=msg.attempts,
            )
            self.submit_dispatch_result(case_id, outcome)
        except Exception:
            log.exception("dispatch worker crashed for case %s", case_id)

    def submit_dispatch_result(self, case_id: str, outcome: escalation.DispatchOutcome) -> None:
        with self._lock:
            self._apply_case_event(case_id, DispatchResult(outcome))

    def _apply_case_event(self, case_id: str, event) -> AlertCase:
        """Run one escalation event; persist and dispatch on a status change."""
        old = self._cases[case_id]
        new = escalation.case_step(old, event, self.config.escalation)
        if new == old:
            return old
        plan: list[DispatchPlanEntry] = []
        became_dispatching = (
            old.status is not CaseStatus.DISPATCHING and new.status is CaseStatus.DISPATCHING
        )
        if became_dispatching:
            new, plan = self._mark_planned(new)
        self._cases[case_id] = new
        if new.status != old.status:
            self._append_record(
                new.device, "alert", self.clock.now_ms(), escalation.case_to_dict(new)
            )
        if became_dispatching:
            began = new.dispatch_began_ms
            self._last_resolution[(new.device, new.cause)] = (
                began if began is not None else self.clock.now_ms()
            )
            self._notify_device(new.device, _SENT_TEXT[new.cause])
            self._submit_plan(new, plan)
        elif new.status is CaseStatus.ACKNOWLEDGED and old.status is not CaseStatus.ACKNOWLEDGED:
            self._last_resolution[(new.device, new.cause)] = (
                new.acked_at_ms if new.acked_at_ms is not None else self.clock.now_ms()
            )
        return new

    def tick(self) -> None:
        """Advance deadline-driven transitions; called regularly and in tests."""
        with self._lock:
            now = self.clock.now_ms()
            for case_id, case in list(self._cases.items()):
                if case.status is CaseStatus.AWAITING_USER_ACK:
                    self._apply_case_event(case_id, Tick(now_ms=now))

    def _notify_device(self, device: str, text: str) -> None:
        """Push a display prompt to the device if it is connected."""
        session = next((s for s in self._sessions.values() if s.device_id == device), None)
        if session is None or session.send is None:
            return
        try:
            session.send(wire.encode(wire.Display(text)))
        except Exception as exc:
            log.warning("prompt to %s failed: %s", device, exc)

    # --- API surface (HTTP handlers call these) ---

    def api_get_state(self, device: str) -> dict:
        with self._lock:
            session = next(
                (s for s in self._sessions.values() if s.device_id == device), None
            )
            fix = self._latest_fix.get(device)
            profile = self._profiles.get(device)
            state = {
                "device": device,
                "connected": session is not None,
                "connected_at_ms": session.connected_at_ms if session else None,
                "frame_errors": session.frame_errors if session else 0,
                "latest_vitals": self._latest_vitals.get(device),
                "latest_fix": escalation.fix_to_dict(fix) if fix else None,
                "address": None,
                "position": None,  # posture never crosses the wire
                "cases": [
                    escalation.case_to_dict(self._cases[cid])
                    for cid in self._case_order.get(device, ())
                ],
                "profile": escalation.profile_to_dict(profile) if profile else None,
                "last_seq": self.records.last_seq,
                "now_ms": self.clock.now_ms(),
            }
        if fix is not None and fix.valid:
            try:
                state["address"] = self.geocoder.resolve(fix).display
            except ProviderUnavailable:
                pass
        return state

    def api_list_devices(self) -> list[dict]:
        """Roster plus any device that has ever produced a record or profile."""
        with self._lock:
            known = set(self.config.devices)
            known.update(s.device_id for s in self._sessions.values())
            known.update(self._case_order)
            known.update(self._latest_vitals)
            known.update(self._profiles)
            connected = {s.device_id for s in self._sessions.values()}
            roster = [d for d in self.config.devices if d in known]
            extras = sorted(known - set(roster))
            return [
                {"device": d, "connected": d in connected} for d in roster + extras
            ]

    def api_get_records(self, device: str | None = None, since_seq: int = 0) -> list[dict]:
        return [r.to_dict() for r in self.records.read_since(since_seq, device=device)]

    def api_post_ack(self, device: str, case_id: str) -> dict:
        with self._lock:
            case = self._cases.get(case_id)
            if case is None or case.device != device:
                raise UnknownCase(case_id)
            now = self.clock.now_ms()
            after = self._apply_case_event(case_id, UserAck(at_ms=now))
            if after.status is CaseStatus.ACKNOWLEDGED and case.status != after.status:
                self._append_record(device, "ack", now, {"source": "api", "case_id": case_id})
            return escalation.case_to_dict(after)

    def register_profile(self, device: str, payload: dict) -> dict:
        with self._lock:
            try:
                profile = escalation.profile_from_dict(payload)
            except (ValueError, KeyError, TypeError) as exc:
                raise ValidationError(str(exc)) from exc
            self._profiles[device] = profile
            self.profile_store.save(
                {dev: escalation.profile_to_dict(p) for dev, p in self._profiles.items()}
            )
            if profile.contacts:
                now = self.clock.now_ms()
                for case_id in list(self._case_order.get(device, ())):
                    held = self._cases[case_id]
                    if held.status is CaseStatus.AWAITING_USER_ACK and not held.contacts_available:
                        self._rescue_held_case(case_id, now)
            return escalation.profile_to_dict(profile)

    def _rescue_held_case(self, case_id: str, now: int) -> None:
        """Re-run a case that was held because the wearer had no contacts."""
        old = self._cases[case_id]
        new = escalation.contacts_registered(old, now)
        if new == old:
            return
        plan: list[DispatchPlanEntry] = []
        if new.status is CaseStatus.DISPATCHING:
            new, plan = self._mark_planned(new)
        self._cases[case_id] = new
        self._append_record(new.device, "alert", now, escalation.case_to_dict(new))
        if new.status is CaseStatus.DISPATCHING:
            self._last_resolution[(new.device, new.cause)] = now
            self._notify_device(new.device, _SENT_TEXT[new.cause])
            self._submit_plan(new, plan)

    # --- event feed ---

    def subscribe(self, since_seq: int = 0) -> tuple[list[StoredRecord], queue.Queue]:
        """Backlog plus a live queue, with no gap and no duplicate in between."""
        with self._lock:
            backlog = self.records.read_since(since_seq)
            q: queue.Queue = queue.Queue()
            self._subscribers.append(q)
            return backlog, q

    def unsubscribe(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._subscribers:
                self._subscribers.remove(q)

    def _append_record(self, device: str, kind: str, t_ms: int, payload: dict) -> StoredRecord:
        rec = self.records.append(device, kind, t_ms, payload)
        for q in self._subscribers:
            q.put(rec)
        return rec

    # --- snapshots / shutdown ---

    def state_snapshot(self) -> dict:
        """Full serializable state; a replay must reproduce it exactly."""
        with self._lock:
            return {
                "cases": {cid: escalation.case_to_dict(c) for cid, c in self._cases.items()},
                "case_order": {d: list(v) for d, v in self._case_order.items()},
                "latest_vitals": dict(self._latest_vitals),
                "latest_fix": {d: escalation.fix_to_dict(f) for d, f in self._latest_fix.items()},
                "last_seq": self.records.last_seq,
            }

    def case_status_history(self) -> list[tuple[str, str]]:
        """(case id, status) in record order; the audit trail of escalation."""
        return [
            (r.payload["id"], r.payload["status"])
            for r in self.records.read_all()
            if r.kind == "alert"
        ]

    def close(self) -> None:
        with self._lock:
            if self._closed:
                return
            self._closed = True
        self._pool.shutdown(wait=True)
        self.records.close()
