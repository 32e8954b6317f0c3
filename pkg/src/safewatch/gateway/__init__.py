"""Gateway: receives wearer-device frames over TCP, persists a record log,
runs the escalation lifecycle, and serves the dashboard HTTP API."""

from .app import Gateway
from .service import DeviceSession, GatewayService, UnknownCase, ValidationError

__all__ = [
    "Gateway",
    "GatewayService",
    "DeviceSession",
    "UnknownCase",
    "ValidationError",
]
