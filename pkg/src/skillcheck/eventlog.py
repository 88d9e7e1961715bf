"""Append-only, hash-chained event log.

Each entry hashes the canonical JSON of ``{index, timestamp, payload,
prev_hash}`` with SHA-256; the first entry links to :data:`GENESIS_HASH`.

File format: a sequence of records, each a 4-byte big-endian length followed
by that many bytes of canonical JSON of the full entry (the four fields above
plus ``hash``). Canonical JSON means UTF-8, keys sorted, separators ``,`` and
``:`` with no whitespace, ASCII escapes for non-ASCII text, and no NaN or
infinities. A verifier recomputes each hash, checks the links, and checks the
stored bytes are themselves canonical, so any altered byte is detected.
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterator

__all__ = ["GENESIS_HASH", "Entry", "EventLog", "canonical_json", "LogFormatError"]

GENESIS_HASH = "0" * 64
_LEN = struct.Struct(">I")


class LogFormatError(ValueError):
    pass


def canonical_json(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False).encode("ascii")


def _entry_hash(index: int, timestamp: int, payload: Any, prev_hash: str) -> str:
    body = {"index": index, "timestamp": timestamp, "payload": payload, "prev_hash": prev_hash}
    return hashlib.sha256(canonical_json(body)).hexdigest()


@dataclass(frozen=True)
class Entry:
    index: int
    timestamp: int
    payload: Any
    prev_hash: str
    hash: str

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "timestamp": self.timestamp,
            "payload": self.payload,
            "prev_hash": self.prev_hash,
            "hash": self.hash,
        }


class EventLog:
    def __init__(self) -> None:
        self._entries: list[Entry] = []

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[Entry]:
        return iter(self._entries)

    def __getitem__(self, k: int) -> Entry:
        return self._entries[k]

    @property
    def head(self) -> str:
        return self._entries[-1].hash if self._entries else GENESIS_HASH

    def append(self, payload: Any) -> Entry:
        # round-trip so the stored payload is exactly what gets hashed and written
        payload = json.loads(canonical_json(payload))
        index = len(self._entries)
        prev = self.head
        e = Entry(index, index, payload, prev, _entry_hash(index, index, payload, prev))
        self._entries.append(e)
        return e

    def verify(self) -> bool:
        return verify_entries(self._entries)

    def to_bytes(self) -> bytes:
        out = bytearray()
        for e in self._entries:
            rec = canonical_json(e.to_dict())
            out += _LEN.pack(len(rec)) + rec
        return bytes(out)

    def write(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def from_bytes(cls, data: bytes) -> "EventLog":
        """Parse a log file. Raises :class:`LogFormatError` on malformed framing or JSON."""
        log = cls()
        pos = 0
        while pos < len(data):
            if pos + _LEN.size > len(data):
                raise LogFormatError(f"truncated length prefix at byte {pos}")
            (size,) = _LEN.unpack_from(data, pos)
            pos += _LEN.size
            raw = data[pos : pos + size]
            if len(raw) != size:
                raise LogFormatError(f"record at byte {pos} is truncated")
            pos += size
            try:
                d = json.loads(raw.decode("ascii"))
                e = Entry(d["index"], d["timestamp"], d["payload"], d["prev_hash"], d["hash"])
            except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
                raise LogFormatError(f"bad record ending at byte {pos}: {exc}") from None
            if set(d) != {"index", "timestamp", "payload", "prev_hash", "hash"}:
                raise LogFormatError(f"unexpected fields in record {e.index}")
            try:
                if canonical_json(d) != raw:
                    raise LogFormatError(f"record {e.index} is not in canonical form")
            except ValueError as exc:
                raise LogFormatError(str(exc)) from None
            log._entries.append(e)
        return log

    @classmethod
    def read(cls, path: str | Path) -> "EventLog":
        return cls.from_bytes(Path(path).read_bytes())


def verify_entries(entries) -> bool:
    prev = GENESIS_HASH
    for k, e in enumerate(entries):
        if e.index != k or e.timestamp != k or e.prev_hash != prev:
            return False
        try:
            if _entry_hash(e.index, e.timestamp, e.payload, e.prev_hash) != e.hash:
                return False
        except (TypeError, ValueError):
            return False
        prev = e.hash
    return True


def verify_bytes(data: bytes) -> bool:
    """True iff ``data`` parses as a log whose hash chain is intact."""
    try:
        return EventLog.from_bytes(data).verify()
    except LogFormatError:
        return False
