"""Alert escalation: double-press panic detection, case lifecycle from
detection through acknowledgment or dispatch, and dispatch planning."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Union

from .gps import GeoFix
from .vitals import PregnancyProfile


class NoContacts(RuntimeError):
    """Dispatch requested with an empty contact list."""


@dataclass(frozen=True)
class Contact:
    """One emergency contact; needs at least one reachable channel."""

    name: str
    phone: str | None = None
    email: str | None = None
    priority: int = 1

    def __post_init__(self):
        if not self.name:
            raise ValueError("contact needs a name")
        if not self.phone and not self.email:
            raise ValueError(f"contact {self.name!r} needs a phone or an email")


@dataclass(frozen=True)
class WearerProfile:
    """Wearer identity, pregnancy status, and emergency contacts."""

    name: str
    contacts: tuple[Contact, ...] = ()
    pregnancy: PregnancyProfile = field(default_factory=PregnancyProfile)

    def __post_init__(self):
        priorities = [c.priority for c in self.contacts]
        if len(set(priorities)) != len(priorities):
            raise ValueError("contact priorities must be unique")


@dataclass(frozen=True)
class EscalationConfig:
    double_press_window_ms: int = 600
    ack_window_ms: int = 60000
    cooldown_ms: int = 120000
    retry_delay_ms: int = 5000

    def __post_init__(self):
        if min(self.double_press_window_ms, self.ack_window_ms, self.retry_delay_ms) <= 0:
            raise ValueError("escalation windows must be positive")
        if self.cooldown_ms < 0:
            raise ValueError("cooldown cannot be negative")


@dataclass(frozen=True)
class ButtonState:
    """Panic button: two presses inside the window mean panic."""

    last_press_ms: int | None = None
    press_count: int = 0


def button_step(
    state: ButtonState, press_at_ms: int, config: EscalationConfig
) -> tuple[ButtonState, bool]:
    """One press; True when this press completes a double-press."""
    if (
        state.last_press_ms is not None
        and press_at_ms - state.last_press_ms <= config.double_press_window_ms
    ):
        return ButtonState(), True
    return ButtonState(last_press_ms=press_at_ms, press_count=1), False


class CaseCause(Enum):
    PANIC = "panic"
    FALL_CONFIRMED = "fall_confirmed"
    VITALS_ABNORMAL = "vitals_abnormal"


class CaseStatus(Enum):
    AWAITING_USER_ACK = "awaiting_user_ack"
    DISPATCHING = "dispatching"
    DISPATCHED = "dispatched"
    ACKNOWLEDGED = "acknowledged"
    SUPPRESSED = "suppressed"


class CasePrompt(Enum):
    SELECT_CONTACTS = "select_contacts"


OPEN_STATUSES = (CaseStatus.AWAITING_USER_ACK, CaseStatus.DISPATCHING)


@dataclass(frozen=True)
class DispatchOutcome:
    """Final result of delivering one message to one contact channel."""

    contact: str
    channel: str
    destination: str
    outcome: str
    attempts: int


@dataclass(frozen=True)
class AlertCase:
    """One incident from detection to its terminal status."""

    id: str
    device: str
    cause: CaseCause
    reasons: tuple[str, ...]
    opened_at_ms: int
    status: CaseStatus
    ack_deadline_ms: int | None
    wearer: str
    fix: GeoFix | None
    address: str | None
    contacts_available: bool
    planned: tuple[tuple[str, str], ...] = ()
    dispatch_record: tuple[DispatchOutcome, ...] = ()
    acked_at_ms: int | None = None
    dispatch_began_ms: int | None = None

    def __post_init__(self):
        if self.status is CaseStatus.DISPATCHED and not self.dispatch_record:
            raise ValueError("dispatched case with empty dispatch record")

    @property
    def is_open(self) -> bool:
        return self.status in OPEN_STATUSES


@dataclass(frozen=True)
class UserAck:
    at_ms: int


@dataclass(frozen=True)
class Tick:
    now_ms: int


@dataclass(frozen=True)
class DispatchResult:
    result: DispatchOutcome


CaseEvent = Union[UserAck, Tick, DispatchResult]


def open_case(
    case_id: str,
    device: str,
    cause: CaseCause,
    reasons: tuple[str, ...],
    now_ms: int,
    fix: GeoFix | None,
    address: str | None,
    profile: WearerProfile,
    config: EscalationConfig,
    last_resolution_ms: int | None,
) -> tuple[AlertCase, list[CasePrompt]]:
    """Open a case for a detected incident.

    Panic/fall dispatch immediately; abnormal vitals first give the wearer an
    acknowledgment window. A repeat cause inside the cooldown, measured from
    the last dispatch or acknowledgment of the same cause, is suppressed so a
    continuing episode cannot storm the contacts. Without contacts the case
    is held awaiting ack and the device is prompted to select contacts; this
    is the one path where panic/fall wait.
    """
    has_contacts = bool(profile.contacts)
    suppressed = (
        last_resolution_ms is not None and now_ms - last_resolution_ms < config.cooldown_ms
    )
    prompts: list[CasePrompt] = []

    if suppressed:
        status = CaseStatus.SUPPRESSED
        deadline = None
    elif not has_contacts:
        status = CaseStatus.AWAITING_USER_ACK
        prompts.append(CasePrompt.SELECT_CONTACTS)
        deadline = now_ms + config.ack_window_ms if cause is CaseCause.VITALS_ABNORMAL else None
    elif cause is CaseCause.VITALS_ABNORMAL:
        status = CaseStatus.AWAITING_USER_ACK
        deadline = now_ms + config.ack_window_ms
    else:
        status = CaseStatus.DISPATCHING
        deadline = None

    case = AlertCase(
        id=case_id,
        device=device,
        cause=cause,
        reasons=tuple(reasons),
        opened_at_ms=now_ms,
        status=status,
        ack_deadline_ms=deadline,
        wearer=profile.name,
        fix=fix,
        address=address,
        contacts_available=has_contacts,
        dispatch_began_ms=now_ms if status is CaseStatus.DISPATCHING else None,
    )
    return case, prompts


def case_step(case: AlertCase, event: CaseEvent, config: EscalationConfig) -> AlertCase:
    """Advance one case by one event; unknown combinations are no-ops.

    An ack only counts while the case still awaits one, and for vitals only
    strictly before the deadline; panic/fall held for missing contacts accept
    an ack at any time (nothing will ever dispatch them without contacts).
    """
    if isinstance(event, UserAck):
        if case.status is not CaseStatus.AWAITING_USER_ACK:
            return case
        if case.ack_deadline_ms is not None and event.at_ms >= case.ack_deadline_ms:
            return case
        return replace(case, status=CaseStatus.ACKNOWLEDGED, acked_at_ms=event.at_ms)

    if isinstance(event, Tick):
        if (
            case.status is CaseStatus.AWAITING_USER_ACK
            and case.contacts_available
            and case.ack_deadline_ms is not None
            and event.now_ms >= case.ack_deadline_ms
        ):
            return replace(case, status=CaseStatus.DISPATCHING, dispatch_began_ms=event.now_ms)
        return case

    if isinstance(event, DispatchResult):
        if case.status is not CaseStatus.DISPATCHING:
            return case
        record = case.dispatch_record + (event.result,)
        done = {(o.contact, o.channel) for o in record}
        case = replace(case, dispatch_record=record)
        if done >= set(case.planned):
            case = replace(case, status=CaseStatus.DISPATCHED)
        return case

    raise TypeError(f"not a case event: {event!r}")


def contacts_registered(case: AlertCase, now_ms: int) -> AlertCase:
    """Re-evaluate a case held for missing contacts once contacts exist.

    Held panic/fall cases dispatch immediately; held vitals cases keep their
    acknowledgment window and fall to the ordinary deadline logic.
    """
    if case.status is not CaseStatus.AWAITING_USER_ACK or case.contacts_available:
        return case
    case = replace(case, contacts_available=True)
    if case.cause in (CaseCause.PANIC, CaseCause.FALL_CONFIRMED):
        return replace(case, status=CaseStatus.DISPATCHING, dispatch_began_ms=now_ms)
    return case


@dataclass(frozen=True)
class DispatchPlanEntry:
    contact: Contact
    channel: str
    destination: str
    message: str


_CAUSE_TEXT = {
    CaseCause.PANIC: "panic button",
    CaseCause.FALL_CONFIRMED: "fall detected",
    CaseCause.VITALS_ABNORMAL: "abnormal vitals",
}


def location_text(case: AlertCase) -> str:
    """Address when resolved, else raw coordinates, else a plain marker."""
    if case.address:
        return case.address
    if case.fix is not None and case.fix.valid:
        return f"{case.fix.lat:.5f},{case.fix.lon:.5f}"
    return "location unavailable"


def cause_text(case: AlertCase) -> str:
    text = _CAUSE_TEXT[case.cause]
    if case.reasons:
        text += " (" + ", ".join(case.reasons) + ")"
    return text


def render_alert_message(case: AlertCase) -> str:
    return (
        f"SAFETY ALERT: {cause_text(case)} for {case.wearer} "
        f"at t={case.opened_at_ms}ms. Location: {location_text(case)}"
    )


def plan_dispatch(case: AlertCase, contacts: tuple[Contact, ...]) -> list[DispatchPlanEntry]:
    """One entry per contact per available channel, in priority order."""
    if not contacts:
        raise NoContacts(f"case {case.id} has no contacts to notify")
    message = render_alert_message(case)
    plan: list[DispatchPlanEntry] = []
    for contact in sorted(contacts, key=lambda c: c.priority):
        if contact.phone:
            plan.append(DispatchPlanEntry(contact, "sms", contact.phone, message))
        if contact.email:
            plan.append(DispatchPlanEntry(contact, "email", contact.email, message))
    return plan


# --- serialization (record log and HTTP API share these shapes) ---


def fix_to_dict(fix: GeoFix) -> dict:
    return {"t_ms": fix.t_ms, "lat": fix.lat, "lon": fix.lon, "valid": fix.valid, "source": fix.source}


def fix_from_dict(d: dict) -> GeoFix:
    return GeoFix(d["t_ms"], d["lat"], d["lon"], d["valid"], d["source"])


def outcome_to_dict(o: DispatchOutcome) -> dict:
    return {
        "contact": o.contact,
        "channel": o.channel,
        "destination": o.destination,
        "outcome": o.outcome,
        "attempts": o.attempts,
    }


def case_to_dict(case: AlertCase) -> dict:
    return {
        "id": case.id,
        "device": case.device,
        "cause": case.cause.value,
        "reasons": list(case.reasons),
        "opened_at_ms": case.opened_at_ms,
        "status": case.status.value,
        "ack_deadline_ms": case.ack_deadline_ms,
        "wearer": case.wearer,
        "fix": fix_to_dict(case.fix) if case.fix is not None else None,
        "address": case.address,
        "contacts_available": case.contacts_available,
        "planned": [list(p) for p in case.planned],
        "dispatch_record": [outcome_to_dict(o) for o in case.dispatch_record],
        "acked_at_ms": case.acked_at_ms,
        "dispatch_began_ms": case.dispatch_began_ms,
    }


def case_from_dict(d: dict) -> AlertCase:
    return AlertCase(
        id=d["id"],
        device=d["device"],
        cause=CaseCause(d["cause"]),
        reasons=tuple(d["reasons"]),
        opened_at_ms=d["opened_at_ms"],
        status=CaseStatus(d["status"]),
        ack_deadline_ms=d["ack_deadline_ms"],
        wearer=d["wearer"],
        fix=fix_from_dict(d["fix"]) if d.get("fix") else None,
        address=d.get("address"),
        contacts_available=d["contacts_available"],
        planned=tuple((p[0], p[1]) for p in d.get("planned", ())),
        dispatch_record=tuple(
            DispatchOutcome(o["contact"], o["channel"], o["destination"], o["outcome"], o["attempts"])
            for o in d.get("dispatch_record", ())
        ),
        acked_at_ms=d.get("acked_at_ms"),
        dispatch_began_ms=d.get("dispatch_began_ms"),
    )


def profile_to_dict(profile: WearerProfile) -> dict:
    return {
        "name": profile.name,
        "contacts": [
            {"name": c.name, "phone": c.phone, "email": c.email, "priority": c.priority}
            for c in profile.contacts
        ],
        "pregnancy": {
            "pregnant": profile.pregnancy.pregnant,
            "gestation_weeks": profile.pregnancy.gestation_weeks,
            "default_range": {
                "bpm_lo": profile.pregnancy.default_range.bpm_lo,
                "bpm_hi": profile.pregnancy.default_range.bpm_hi,
                "spo2_lo": profile.pregnancy.default_range.spo2_lo,
            },
            "bands": [
                {
                    "weeks_lo": b.weeks_lo,
                    "weeks_hi": b.weeks_hi,
                    "bpm_lo": b.normal.bpm_lo,
                    "bpm_hi": b.normal.bpm_hi,
                    "spo2_lo": b.normal.spo2_lo,
                }
                for b in profile.pregnancy.bands
            ],
        },
    }


def profile_from_dict(d: dict) -> WearerProfile:
    from .vitals import GestationBand, NormalRange, PregnancyProfile

    if not isinstance(d.get("name"), str) or not d["name"]:
        raise ValueError("profile needs a wearer name")
    contacts = tuple(
        Contact(
            name=c["name"],
            phone=c.get("phone"),
            email=c.get("email"),
            priority=c.get("priority", i + 1),
        )
        for i, c in enumerate(d.get("contacts", ()))
    )
    preg = d.get("pregnancy") or {}
    default = preg.get("default_range") or {}
    pregnancy = PregnancyProfile(
        pregnant=bool(preg.get("pregnant", False)),
        gestation_weeks=int(preg.get("gestation_weeks", 0)),
        default_range=NormalRange(
            bpm_lo=int(default.get("bpm_lo", 50)),
            bpm_hi=int(default.get("bpm_hi", 115)),
            spo2_lo=float(default.get("spo2_lo", 94.0)),
        ),
        bands=tuple(
            GestationBand(
                weeks_lo=int(b["weeks_lo"]),
                weeks_hi=int(b["weeks_hi"]),
                normal=NormalRange(
                    bpm_lo=int(b.get("bpm_lo", 50)),
                    bpm_hi=int(b.get("bpm_hi", 115)),
                    spo2_lo=float(b.get("spo2_lo", 94.0)),
                ),
            )
            for b in preg.get("bands", ())
        ),
    )
    return WearerProfile(name=d["name"], contacts=contacts, pregnancy=pregnancy)
