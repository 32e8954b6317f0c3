"""Persistence: append-only JSONL record log with global and per-device
sequence numbers, plus a compacted profile snapshot file."""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass
from pathlib import Path

log = logging.getLogger(__name__)

RECORD_KINDS = ("vitals", "fix", "alert", "ack")


@dataclass(frozen=True)
class StoredRecord:
    """One persisted event; seq is global, dseq counts within the device."""

    seq: int
    dseq: int
    device: str
    kind: str
    t_ms: int
    payload: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "dseq": self.dseq,
            "device": self.device,
            "kind": self.kind,
            "t_ms": self.t_ms,
            "payload": self.payload,
        }


class RecordLog:
    """Append-only line-per-record log; reopening resumes sequence numbers."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._seq = 0
        self._dseq: dict[str, int] = {}
        self._records = self._load()
        self._fh = open(self.path, "a", encoding="utf-8")

    def _load(self) -> list[StoredRecord]:
        records: list[StoredRecord] = []
        if not self.path.exists():
            return records
        with open(self.path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
        for lineno, line in enumerate(lines, 1):
            line = line.strip()
            if not line:
                continue
            try:
                d = json.loads(line)
                rec = StoredRecord(
                    d["seq"], d["dseq"], d["device"], d["kind"], d["t_ms"], d["payload"]
                )
            except (ValueError, KeyError, TypeError):
                # A torn final line can survive a crash; anything else is corruption.
                if lineno == len(lines):
                    log.warning("dropping torn trailing record at line %d", lineno)
                    continue
                raise ValueError(f"corrupt record log at line {lineno}") from None
            if rec.seq <= self._seq:
                raise ValueError(f"sequence regression at line {lineno}")
            self._seq = rec.seq
            self._dseq[rec.device] = rec.dseq
            records.append(rec)
        return records

    def append(self, device: str, kind: str, t_ms: int, payload: dict) -> StoredRecord:
        if kind not in RECORD_KINDS:
            raise ValueError(f"unknown record kind {kind!r}")
        with self._lock:
            self._seq += 1
            dseq = self._dseq.get(device, 0) + 1
            self._dseq[device] = dseq
            rec = StoredRecord(self._seq, dseq, device, kind, t_ms, payload)
            self._records.append(rec)
            self._fh.write(json.dumps(rec.to_dict(), sort_keys=True) + "\n")
            self._fh.flush()
            return rec

    def read_all(self) -> list[StoredRecord]:
        with self._lock:
            return list(self._records)

    def read_since(self, since_seq: int = 0, device: str | None = None) -> list[StoredRecord]:
        with self._lock:
            return [
                r
                for r in self._records
                if r.seq > since_seq and (device is None or r.device == device)
            ]

    @property
    def last_seq(self) -> int:
        with self._lock:
            return self._seq

    def close(self) -> None:
        with self._lock:
            self._fh.close()


class ProfileStore:
    """Compacted wearer-profile snapshot: whole file rewritten atomically."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def load(self) -> dict[str, dict]:
        if not self.path.exists():
            return {}
        with open(self.path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValueError("profile store must hold an object keyed by device id")
        return data

    def save(self, profiles: dict[str, dict]) -> None:
        tmp = self.path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(profiles, fh, sort_keys=True, indent=2)
            fh.write("\n")
        os.replace(tmp, self.path)
