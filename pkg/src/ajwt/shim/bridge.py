"""Bridge identifiers: binding live in-process anchors to the checksum computed at startup.

An anchor is either an agent object (matched by identity against ``self`` in
stack frames) or a plain function (matched by its code object). Lookups never
go through names, so a second object that merely claims an agent id resolves
to nothing.
"""

from __future__ import annotations

import sys
import threading
import types
from dataclasses import dataclass
from typing import Any, Optional

from ajwt import reasons


class BridgeError(Exception):
    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass(frozen=True)
class BridgeIdentifier:
    anchor_id: str
    agent_id: str
    checksum_at_startup: str


def _anchor_id(anchor: Any) -> str:
    if isinstance(anchor, types.FunctionType):
        return f"function:{anchor.__module__}.{anchor.__qualname__}"
    return f"object:{type(anchor).__module__}.{type(anchor).__qualname__}@{id(anchor):x}"


class BridgeRegistry:
    """Anchor registry filled once at startup, then frozen."""

    def __init__(self) -> None:
        self._objects: dict[int, tuple[Any, BridgeIdentifier]] = {}
        self._codes: dict[types.CodeType, BridgeIdentifier] = {}
        self._agents: set[str] = set()
        self._frozen = False
        self._lock = threading.Lock()

    def register(self, anchor: Any, agent_id: str, checksum: str) -> BridgeIdentifier:
        with self._lock:
            if self._frozen:
                raise BridgeError(reasons.UNKNOWN_ANCHOR, "anchor registry is frozen after startup")
            if agent_id in self._agents:
                raise BridgeError(reasons.ANCHOR_AGENT_MISMATCH, f"agent {agent_id!r} already has an anchor")
            bridge = BridgeIdentifier(_anchor_id(anchor), agent_id, checksum)
            if isinstance(anchor, types.FunctionType):
                if anchor.__code__ in self._codes:
                    raise BridgeError(reasons.ANCHOR_AGENT_MISMATCH, "function anchor registered twice")
                self._codes[anchor.__code__] = bridge
            else:
                if id(anchor) in self._objects:
                    raise BridgeError(reasons.ANCHOR_AGENT_MISMATCH, "object anchor registered twice")
                # keep a strong reference so the id can never be recycled by another object
                self._objects[id(anchor)] = (anchor, bridge)
            self._agents.add(agent_id)
            return bridge

    def freeze(self) -> None:
        with self._lock:
            self._frozen = True

    @property
    def frozen(self) -> bool:
        return self._frozen

    def lookup(self, anchor: Any) -> Optional[BridgeIdentifier]:
        if isinstance(anchor, types.FunctionType):
            return self._codes.get(anchor.__code__)
        hit = self._objects.get(id(anchor))
        if hit is not None and hit[0] is anchor:
            return hit[1]
        return None

    def _frame_bridge(self, frame: types.FrameType) -> Optional[BridgeIdentifier]:
        bridge = self._codes.get(frame.f_code)
        if bridge is not None:
            return bridge
        if frame.f_code.co_argcount and frame.f_code.co_varnames[0] == "self":
            hit = self._objects.get(id(frame.f_locals.get("self")))
            if hit is not None and hit[0] is frame.f_locals.get("self"):
                return hit[1]
        return None

    def find_on_stack(self, skip: int = 1) -> Optional[BridgeIdentifier]:
        """Innermost registered anchor among the caller's frames."""
        frame: Optional[types.FrameType] = sys._getframe(skip)
        while frame is not None:
            bridge = self._frame_bridge(frame)
            if bridge is not None:
                return bridge
            frame = frame.f_back
        return None

    def resolve_runtime_checksum(self, bridge: Optional[BridgeIdentifier], agent_id: str) -> str:
        """Startup checksum bound to ``bridge``; fails unless it is a registered bridge of ``agent_id``."""
        if bridge is None or not self._is_registered(bridge):
            raise BridgeError(reasons.UNKNOWN_ANCHOR, "caller is not a registered agent anchor")
        if bridge.agent_id != agent_id:
            raise BridgeError(
                reasons.ANCHOR_AGENT_MISMATCH,
                f"anchor belongs to {bridge.agent_id!r}, not {agent_id!r}",
            )
        return bridge.checksum_at_startup

    def _is_registered(self, bridge: BridgeIdentifier) -> bool:
        return any(b is bridge for _, b in self._objects.values()) or any(b is bridge for b in self._codes.values())
