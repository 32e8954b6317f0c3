"""NMEA 0183 sentence codec (GGA/RMC), fix extraction, and reverse geocoding
through a pluggable provider with a synchronized cache."""

from __future__ import annotations

import logging
import threading
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass

log = logging.getLogger(__name__)

_HEX = "0123456789ABCDEFabcdef"


class NmeaError(ValueError):
    pass


class MalformedSentence(NmeaError):
    """Not even sentence-shaped: missing $, *, type, or checksum digits."""


class BadChecksum(NmeaError):
    """Stated checksum disagrees with the XOR of the payload."""


class UnsupportedSentence(NmeaError):
    """Well-formed, but not a type this system consumes."""


class FieldParseError(NmeaError):
    """Supported sentence with an uninterpretable field."""


class ProviderUnavailable(RuntimeError):
    """Geocoding backend unreachable or out of answers."""


def checksum_of(payload: str) -> int:
    """XOR of every character between '$' and '*'."""
    total = 0
    for ch in payload:
        total ^= ord(ch)
    return total & 0xFF


@dataclass(frozen=True)
class NmeaSentence:
    """One parsed sentence; checksum kept as transmitted for exact re-render."""

    sentence_type: str
    fields: tuple[str, ...]
    checksum: str

    def render(self) -> str:
        return "$" + ",".join((self.sentence_type,) + self.fields) + "*" + self.checksum


def parse_sentence(line: str) -> NmeaSentence:
    """Validate framing and checksum; fields stay as raw text."""
    line = line.rstrip("\r\n")
    if not line.startswith("$"):
        raise MalformedSentence(f"missing leading $: {line[:20]!r}")
    star = line.rfind("*")
    if star < 0:
        raise MalformedSentence("missing checksum delimiter *")
    payload, stated = line[1:star], line[star + 1:]
    if len(stated) != 2 or any(c not in _HEX for c in stated):
        raise MalformedSentence(f"checksum must be two hex digits, got {stated!r}")
    parts = payload.split(",")
    if not parts[0]:
        raise MalformedSentence("empty sentence type")
    computed = checksum_of(payload)
    if computed != int(stated, 16):
        raise BadChecksum(f"stated {stated} != computed {computed:02X}")
    return NmeaSentence(parts[0], tuple(parts[1:]), stated)


def make_sentence(sentence_type: str, fields: tuple[str, ...]) -> NmeaSentence:
    """Build a sentence, computing the checksum (uppercase hex)."""
    payload = ",".join((sentence_type,) + tuple(fields))
    return NmeaSentence(sentence_type, tuple(fields), f"{checksum_of(payload):02X}")


@dataclass(frozen=True)
class GeoFix:
    """One position fix; invalid fixes carry no coordinates."""

    t_ms: int
    lat: float | None
    lon: float | None
    valid: bool
    source: str

    def __post_init__(self):
        if self.valid:
            if self.lat is None or self.lon is None:
                raise ValueError("valid fix without coordinates")
            if not (-90.0 <= self.lat <= 90.0 and -180.0 <= self.lon <= 180.0):
                raise ValueError(f"coordinates out of range: {self.lat},{self.lon}")
        elif self.lat is not None or self.lon is not None:
            raise ValueError("invalid fix must not carry coordinates")


def _parse_coord(text: str, hemi: str, lat: bool) -> float:
    """ddmm.mmmm (lat) / dddmm.mmmm (lon) plus hemisphere letter to degrees."""
    if not text:
        raise FieldParseError("empty coordinate")
    head = text[: text.index(".") - 2] if "." in text else text[:-2]
    mins = text[len(head):]
    try:
        degrees = int(head) if head else 0
        minutes = float(mins)
    except ValueError:
        raise FieldParseError(f"bad coordinate: {text!r}") from None
    if degrees < 0 or minutes < 0:
        raise FieldParseError(f"negative coordinate component: {text!r}")
    value = degrees + minutes / 60.0
    if lat:
        if hemi not in ("N", "S"):
            raise FieldParseError(f"bad latitude hemisphere: {hemi!r}")
        if hemi == "S":
            value = -value
        if not -90.0 <= value <= 90.0:
            raise FieldParseError(f"latitude out of range: {value}")
    else:
        if hemi not in ("E", "W"):
            raise FieldParseError(f"bad longitude hemisphere: {hemi!r}")
        if hemi == "W":
            value = -value
        if not -180.0 <= value <= 180.0:
            raise FieldParseError(f"longitude out of range: {value}")
    return value


def to_fix(sentence: NmeaSentence, t_ms: int) -> GeoFix:
    """Extract a position fix from a GGA or RMC sentence."""
    stype = sentence.sentence_type
    f = sentence.fields
    if stype.endswith("GGA"):
        if len(f) < 6:
            raise FieldParseError(f"GGA needs 6+ fields, got {len(f)}")
        if f[5] in ("", "0"):
            return GeoFix(t_ms, None, None, False, stype)
        if not f[5].isdigit():
            raise FieldParseError(f"bad fix quality: {f[5]!r}")
        lat = _parse_coord(f[1], f[2], lat=True)
        lon = _parse_coord(f[3], f[4], lat=False)
        return GeoFix(t_ms, lat, lon, True, stype)
    if stype.endswith("RMC"):
        if len(f) < 6:
            raise FieldParseError(f"RMC needs 6+ fields, got {len(f)}")
        if f[1] != "A":
            return GeoFix(t_ms, None, None, False, stype)
        lat = _parse_coord(f[2], f[3], lat=True)
        lon = _parse_coord(f[4], f[5], lat=False)
        return GeoFix(t_ms, lat, lon, True, stype)
    raise UnsupportedSentence(stype)


def _coord_fields(value: float, lat: bool) -> tuple[str, str]:
    if lat:
        hemi = "N" if value >= 0 else "S"
        width = 2
    else:
        hemi = "E" if value >= 0 else "W"
        width = 3
    mag = abs(value)
    degrees = int(mag)
    minutes = (mag - degrees) * 60.0
    if round(minutes, 4) >= 60.0:  # rounding can spill into the next degree
        degrees += 1
        minutes = 0.0
    return f"{degrees:0{width}d}{minutes:07.4f}", hemi


def fix_to_gga(fix: GeoFix, talker: str = "GP") -> NmeaSentence:
    """Render a fix as a GGA sentence (inverse codec at ddmm.mmmm precision)."""
    hhmmss = "{:02d}{:02d}{:02d}".format(
        (fix.t_ms // 3_600_000) % 24, (fix.t_ms // 60_000) % 60, (fix.t_ms // 1000) % 60
    )
    if not fix.valid:
        fields = (hhmmss, "", "", "", "", "0", "00", "", "", "M", "", "M", "", "")
    else:
        lat_txt, lat_hemi = _coord_fields(fix.lat, lat=True)
        lon_txt, lon_hemi = _coord_fields(fix.lon, lat=False)
        fields = (hhmmss, lat_txt, lat_hemi, lon_txt, lon_hemi, "1", "08", "0.9", "545.4", "M", "46.9", "M", "", "")
    return make_sentence(talker + "GGA", fields)


@dataclass(frozen=True)
class Address:
    """Resolved street address for a fix."""

    display: str
    lat: float
    lon: float
    provider: str

    def __post_init__(self):
        if not self.display:
            raise ValueError("resolved address cannot be empty")


def _cache_key(lat: float, lon: float) -> str:
    return f"{lat:.4f},{lon:.4f}"


class StubGeocoder:
    """Deterministic table-driven geocoder for tests and offline runs.

    Keys are "lat,lon" strings at 4 decimals; unknown coordinates fall back
    to `default`, or raise ProviderUnavailable when none is set.
    """

    provider = "stub"

    def __init__(self, table: dict[str, str] | None = None, default: str | None = None):
        self.table = dict(table or {})
        self.default = default

    def lookup(self, lat: float, lon: float) -> str:
        hit = self.table.get(_cache_key(lat, lon), self.default)
        if not hit:
            raise ProviderUnavailable(f"no stub entry for {_cache_key(lat, lon)}")
        return hit


class HttpGeocoder:
    """GET <url>?lat=..&lon=.. expecting a plain-text address back."""

    provider = "http"

    def __init__(self, url: str, timeout_s: float = 2.0):
        self.url = url
        self.timeout_s = timeout_s

    def lookup(self, lat: float, lon: float) -> str:
        query = urllib.parse.urlencode({"lat": f"{lat:.5f}", "lon": f"{lon:.5f}"})
        try:
            with urllib.request.urlopen(f"{self.url}?{query}", timeout=self.timeout_s) as resp:
                if not 200 <= resp.status < 300:
                    raise ProviderUnavailable(f"geocoder returned {resp.status}")
                text = resp.read().decode("utf-8", "replace").strip()
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise ProviderUnavailable(f"geocoder unreachable: {exc}") from exc
        if not text:
            raise ProviderUnavailable("geocoder returned empty body")
        return text


class ReverseGeocoder:
    """Caching front over a geocoder client; one entry per 4-decimal cell."""

    def __init__(self, client):
        self.client = client
        self._cache: dict[str, Address] = {}
        self._lock = threading.Lock()

    def resolve(self, fix: GeoFix) -> Address:
        if not fix.valid:
            raise ValueError("cannot geocode an invalid fix")
        key = _cache_key(fix.lat, fix.lon)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        text = self.client.lookup(fix.lat, fix.lon)
        address = Address(text, fix.lat, fix.lon, getattr(self.client, "provider", "unknown"))
        with self._lock:
            self._cache[key] = address
        return address
