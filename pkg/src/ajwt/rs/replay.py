"""Replay state for PoP-bound tokens."""

from __future__ import annotations

import threading
from typing import Hashable


class ReplayCache:
    """Seen token ids and seen request signatures, each kept until its validity ends.

    ``claim`` is an atomic insert-if-absent over both keys.
    """

    def __init__(self, sweep_threshold: int = 4096) -> None:
        self._jti: dict[str, int] = {}
        self._signatures: dict[Hashable, int] = {}
        self._lock = threading.Lock()
        # expired entries are swept when the table doubles, keeping inserts amortised O(1)
        self._sweep_at = sweep_threshold
        self._min_sweep = sweep_threshold

    def _evict(self, now: int) -> None:
        for table in (self._jti, self._signatures):
            stale = [k for k, exp in table.items() if exp <= now]
            for k in stale:
                del table[k]

    def seen(self, jti: str, signature_key: Hashable, now: int) -> bool:
        with self._lock:
            return self._live(self._jti, jti, now) or self._live(self._signatures, signature_key, now)

    @staticmethod
    def _live(table: dict, key: Hashable, now: int) -> bool:
        exp = table.get(key)
        return exp is not None and exp > now

    def claim(self, jti: str, jti_expiry: int, signature_key: Hashable, signature_expiry: int, now: int) -> bool:
        with self._lock:
            if self._live(self._jti, jti, now) or self._live(self._signatures, signature_key, now):
                return False
            if len(self._jti) >= self._sweep_at:
                self._evict(now)
                self._sweep_at = max(self._min_sweep, 2 * len(self._jti))
            self._jti[jti] = jti_expiry
            self._signatures[signature_key] = signature_expiry
            return True

    def __len__(self) -> int:
        with self._lock:
            return len(self._jti)
