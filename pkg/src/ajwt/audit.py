"""Append-only, hash-chained event log shared by the IDP and resource servers."""

from __future__ import annotations

import copy
import threading
from dataclasses import dataclass, field
from typing import Any, Iterator, Mapping, Optional

from ajwt.core.canonical import canonical_json, compute_checksum

GENESIS_HASH = "sha256:" + "0" * 64


@dataclass
class LogEntry:
    sequence_no: int
    timestamp: int
    body: dict[str, Any]
    prev_entry_hash: str
    entry_hash: str = ""

    def compute_hash(self) -> str:
        doc = {"sequence_no": self.sequence_no, "timestamp": self.timestamp, "body": self.body}
        return str(compute_checksum(self.prev_entry_hash.encode("ascii") + canonical_json(doc)))

    def to_dict(self) -> dict[str, Any]:
        return {
            "sequence_no": self.sequence_no,
            "timestamp": self.timestamp,
            "body": self.body,
            "prev_entry_hash": self.prev_entry_hash,
            "entry_hash": self.entry_hash,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LogEntry":
        return cls(
            data["sequence_no"], data["timestamp"], dict(data["body"]), data["prev_entry_hash"], data["entry_hash"]
        )


@dataclass
class HashChainLog:
    """Entries link to their predecessor by hash; the head is kept apart so tail truncation shows up."""

    entries: list[LogEntry] = field(default_factory=list)
    head_sequence_no: int = 0
    head_hash: str = GENESIS_HASH
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def append(self, body: Mapping[str, Any], timestamp: int) -> LogEntry:
        with self._lock:
            entry = LogEntry(
                sequence_no=self.head_sequence_no + 1,
                timestamp=int(timestamp),
                body=copy.deepcopy(dict(body)),
                prev_entry_hash=self.head_hash,
            )
            entry.entry_hash = entry.compute_hash()
            self.entries.append(entry)
            self.head_sequence_no = entry.sequence_no
            self.head_hash = entry.entry_hash
            return entry

    def verify(self) -> bool:
        with self._lock:
            prev = GENESIS_HASH
            for expected_seq, entry in enumerate(self.entries, start=1):
                if entry.sequence_no != expected_seq or entry.prev_entry_hash != prev:
                    return False
                if entry.compute_hash() != entry.entry_hash:
                    return False
                prev = entry.entry_hash
            return len(self.entries) == self.head_sequence_no and prev == self.head_hash

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[LogEntry]:
        return iter(list(self.entries))

    def last(self) -> Optional[LogEntry]:
        return self.entries[-1] if self.entries else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "entries": [e.to_dict() for e in self.entries],
            "head": {"sequence_no": self.head_sequence_no, "entry_hash": self.head_hash},
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "HashChainLog":
        head = data.get("head", {})
        return cls(
            entries=[LogEntry.from_dict(e) for e in data.get("entries", [])],
            head_sequence_no=head.get("sequence_no", 0),
            head_hash=head.get("entry_hash", GENESIS_HASH),
        )
