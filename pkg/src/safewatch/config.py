"""Gateway configuration: one JSON file covering thresholds, windows, ports,
sinks, and the geocoder, with defaults that work out of the box."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .escalation import EscalationConfig
from .motion import AxisCalibration, X_CAL, Y_CAL, Z_CAL
from .vitals import GestationBand, NormalRange


@dataclass(frozen=True)
class MotionConfig:
    rms_threshold_g: float = 1.4
    confirm_window_ms: int = 15000
    cooldown_ms: int = 120000
    x_cal: AxisCalibration = X_CAL
    y_cal: AxisCalibration = Y_CAL
    z_cal: AxisCalibration = Z_CAL


@dataclass(frozen=True)
class VitalsConfig:
    rate_size: int = 4
    spo2_window: int = 100
    report_interval_ms: int = 1000
    default_range: NormalRange = field(default_factory=NormalRange)
    gestation_bands: tuple[GestationBand, ...] = ()

    def __post_init__(self):
        if self.rate_size <= 0 or self.spo2_window <= 0 or self.report_interval_ms <= 0:
            raise ValueError("vitals config values must be positive")


@dataclass(frozen=True)
class DispatchConfig:
    email_url: str | None = None
    email_service_id: str = "service_safewatch"
    email_template_id: str = "template_alert"
    email_user_id: str = "user_gateway"
    email_timeout_s: float = 5.0
    sms_outbox: str = "sms_outbox.txt"
    sms_webhook: str | None = None


@dataclass(frozen=True)
class GeocoderConfig:
    mode: str = "stub"  # "stub" or "http"
    url: str | None = None
    table: dict = field(default_factory=dict)
    default: str | None = None
    timeout_s: float = 2.0

    def __post_init__(self):
        if self.mode not in ("stub", "http"):
            raise ValueError(f"geocoder mode must be stub or http, got {self.mode!r}")
        if self.mode == "http" and not self.url:
            raise ValueError("http geocoder needs a url")


@dataclass(frozen=True)
class GatewayConfig:
    bind: str = "127.0.0.1"
    tcp_port: int = 7470
    http_port: int = 7471
    data_dir: str = "data"
    time_scale: float = 1.0
    tick_interval_ms: int = 20
    devices: tuple[str, ...] = ("watch-1",)
    motion: MotionConfig = field(default_factory=MotionConfig)
    vitals: VitalsConfig = field(default_factory=VitalsConfig)
    escalation: EscalationConfig = field(default_factory=EscalationConfig)
    dispatch: DispatchConfig = field(default_factory=DispatchConfig)
    geocoder: GeocoderConfig = field(default_factory=GeocoderConfig)

    def __post_init__(self):
        if self.time_scale <= 0:
            raise ValueError("time_scale must be positive")
        if self.tick_interval_ms <= 0:
            raise ValueError("tick_interval_ms must be positive")


def _cal_from(d: dict, fallback: AxisCalibration) -> AxisCalibration:
    if not d:
        return fallback
    return AxisCalibration(int(d["in_lo"]), int(d["in_hi"]), int(d["divisor"]))


def _range_from(d: dict) -> NormalRange:
    return NormalRange(
        bpm_lo=int(d.get("bpm_lo", 50)),
        bpm_hi=int(d.get("bpm_hi", 115)),
        spo2_lo=float(d.get("spo2_lo", 94.0)),
    )


def config_from_dict(d: dict) -> GatewayConfig:
    motion = d.get("motion") or {}
    vitals = d.get("vitals") or {}
    esc = d.get("escalation") or {}
    dispatch = d.get("dispatch") or {}
    geo = d.get("geocoder") or {}
    cal = motion.get("calibration") or {}
    return GatewayConfig(
        bind=d.get("bind", "127.0.0.1"),
        tcp_port=int(d.get("tcp_port", 7470)),
        http_port=int(d.get("http_port", 7471)),
        data_dir=d.get("data_dir", "data"),
        time_scale=float(d.get("time_scale", 1.0)),
        tick_interval_ms=int(d.get("tick_interval_ms", 20)),
        devices=tuple(d.get("devices", ("watch-1",))),
        motion=MotionConfig(
            rms_threshold_g=float(motion.get("rms_threshold_g", 1.4)),
            confirm_window_ms=int(motion.get("confirm_window_ms", 15000)),
            cooldown_ms=int(motion.get("cooldown_ms", 120000)),
            x_cal=_cal_from(cal.get("x") or {}, X_CAL),
            y_cal=_cal_from(cal.get("y") or {}, Y_CAL),
            z_cal=_cal_from(cal.get("z") or {}, Z_CAL),
        ),
        vitals=VitalsConfig(
            rate_size=int(vitals.get("rate_size", 4)),
            spo2_window=int(vitals.get("spo2_window", 100)),
            report_interval_ms=int(vitals.get("report_interval_ms", 1000)),
            default_range=_range_from(vitals.get("default_range") or {}),
            gestation_bands=tuple(
                GestationBand(int(b["weeks_lo"]), int(b["weeks_hi"]), _range_from(b))
                for b in vitals.get("gestation_bands", ())
            ),
        ),
        escalation=EscalationConfig(
            double_press_window_ms=int(esc.get("double_press_window_ms", 600)),
            ack_window_ms=int(esc.get("ack_window_ms", 60000)),
            cooldown_ms=int(esc.get("cooldown_ms", 120000)),
            retry_delay_ms=int(esc.get("retry_delay_ms", 5000)),
        ),
        dispatch=DispatchConfig(
            email_url=dispatch.get("email_url"),
            email_service_id=dispatch.get("email_service_id", "service_safewatch"),
            email_template_id=dispatch.get("email_template_id", "template_alert"),
            email_user_id=dispatch.get("email_user_id", "user_gateway"),
            email_timeout_s=float(dispatch.get("email_timeout_s", 5.0)),
            sms_outbox=dispatch.get("sms_outbox", "sms_outbox.txt"),
            sms_webhook=dispatch.get("sms_webhook"),
        ),
        geocoder=GeocoderConfig(
            mode=geo.get("mode", "stub"),
            url=geo.get("url"),
            table=dict(geo.get("table", {})),
            default=geo.get("default"),
            timeout_s=float(geo.get("timeout_s", 2.0)),
        ),
    )


def load_config(path: str | Path) -> GatewayConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))
