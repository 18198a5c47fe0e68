"""Declarative route policy: which scopes and which workflow steps may reach an endpoint."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

_PARAM_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


def _compile_route(route: str) -> re.Pattern[str]:
    parts = []
    pos = 0
    for m in _PARAM_RE.finditer(route):
        parts.append(re.escape(route[pos : m.start()]))
        parts.append(f"(?P<{m.group(1)}>[^/]+)")
        pos = m.end()
    parts.append(re.escape(route[pos:]))
    return re.compile("".join(parts))


@dataclass(frozen=True)
class EndpointPolicy:
    method: str
    route: str
    required_scopes: frozenset[str] = frozenset()
    # (workflow_id, step_id) pairs; empty means any step of any workflow
    allowed_workflow_steps: frozenset[tuple[str, str]] = frozenset()
    require_intent: bool = True
    _pattern: re.Pattern[str] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", self.method.upper())
        object.__setattr__(self, "_pattern", _compile_route(self.route))

    def matches(self, method: str, path: str) -> bool:
        return method.upper() == self.method and self._pattern.fullmatch(path) is not None

    def step_allowed(self, workflow_id: str, step_id: str) -> bool:
        return not self.allowed_workflow_steps or (workflow_id, step_id) in self.allowed_workflow_steps

    def to_dict(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "route": self.route,
            "required_scopes": sorted(self.required_scopes),
            "allowed_workflow_steps": [list(p) for p in sorted(self.allowed_workflow_steps)],
            "require_intent": self.require_intent,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EndpointPolicy":
        return cls(
            method=str(data["method"]),
            route=str(data["route"]),
            required_scopes=frozenset(data.get("required_scopes", [])),
            allowed_workflow_steps=frozenset((str(w), str(s)) for w, s in data.get("allowed_workflow_steps", [])),
            require_intent=bool(data.get("require_intent", True)),
        )


class PolicyDocument:
    """Ordered list of endpoint policies; the first match wins."""

    def __init__(self, policies: Iterable[EndpointPolicy]):
        self.policies = list(policies)

    def find(self, method: str, path: str) -> Optional[EndpointPolicy]:
        for policy in self.policies:
            if policy.matches(method, path):
                return policy
        return None

    def to_dict(self) -> dict[str, Any]:
        return {"endpoints": [p.to_dict() for p in self.policies]}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PolicyDocument":
        return cls(EndpointPolicy.from_dict(p) for p in data.get("endpoints", []))

    @classmethod
    def load(cls, path: str | Path) -> "PolicyDocument":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
