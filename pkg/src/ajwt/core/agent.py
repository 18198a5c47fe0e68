"""Agent signatures: the (prompt template, tools, configuration) identity triple."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Mapping, Union

from ajwt.core.canonical import Checksum, canonical_json, compute_checksum

Scalar = Union[str, int, float, bool, None]

PLACEHOLDER_RE = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class SignatureError(ValueError):
    """The agent signature violates its structural invariants."""


class PromptIntegrityError(ValueError):
    """A live prompt is not the registered template with whitelisted substitutions."""


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    signature: str = ""
    description: str = ""

    def to_dict(self) -> dict[str, str]:
        return {"name": self.name, "signature": self.signature, "description": self.description}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ToolDescriptor":
        return cls(str(data["name"]), str(data.get("signature", "")), str(data.get("description", "")))


@dataclass
class AgentSignature:
    prompt_template: str = ""
    substitution_slots: list[str] = field(default_factory=list)
    tools: list[ToolDescriptor] = field(default_factory=list)
    config: dict[str, Scalar] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "prompt_template": self.prompt_template,
            "substitution_slots": list(self.substitution_slots),
            "tools": [t.to_dict() for t in self.tools],
            "config": dict(self.config),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AgentSignature":
        try:
            return cls(
                prompt_template=str(data.get("prompt_template", "")),
                substitution_slots=[str(s) for s in data.get("substitution_slots", [])],
                tools=[ToolDescriptor.from_dict(t) for t in data.get("tools", [])],
                config=dict(data.get("config", {})),
            )
        except (KeyError, TypeError, AttributeError) as exc:
            raise SignatureError(f"malformed agent signature: {exc}") from exc


def template_placeholders(template: str) -> set[str]:
    return set(PLACEHOLDER_RE.findall(template))


def validate_signature(sig: AgentSignature) -> None:
    names = [t.name for t in sig.tools]
    if any(not n for n in names):
        raise SignatureError("tool name must be non-empty")
    if len(names) != len(set(names)):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise SignatureError(f"duplicate tool name(s): {', '.join(dupes)}")
    missing = set(sig.substitution_slots) - template_placeholders(sig.prompt_template)
    if missing:
        raise SignatureError(f"substitution slot(s) not in template: {', '.join(sorted(missing))}")
    for key, value in sig.config.items():
        if not isinstance(key, str):
            raise SignatureError("config keys must be strings")
        if not isinstance(value, (str, int, float, bool)) and value is not None:
            raise SignatureError(f"config value for {key!r} is not a scalar")


def canonicalize_agent_signature(sig: AgentSignature) -> bytes:
    """Canonical bytes of a signature.

    Tools are ordered by name, config keys and slot names are sorted, and the
    template is hashed with its placeholders intact.
    """
    validate_signature(sig)
    doc = {
        "config": dict(sig.config),
        "prompt_template": sig.prompt_template,
        "substitution_slots": sorted(set(sig.substitution_slots)),
        "tools": [t.to_dict() for t in sorted(sig.tools, key=lambda t: t.name)],
    }
    return canonical_json(doc)


def agent_checksum(sig: AgentSignature) -> Checksum:
    return compute_checksum(canonicalize_agent_signature(sig))


def render_prompt(sig: AgentSignature, **values: str) -> str:
    """Fill declared slots; undeclared placeholders stay literal."""
    unknown = set(values) - set(sig.substitution_slots)
    if unknown:
        raise PromptIntegrityError(f"substitution for undeclared slot(s): {', '.join(sorted(unknown))}")

    def fill(m: re.Match[str]) -> str:
        name = m.group(1)
        if name in values:
            return str(values[name])
        return m.group(0)

    return PLACEHOLDER_RE.sub(fill, sig.prompt_template)


def validate_prompt(sig: AgentSignature, live_prompt: str) -> dict[str, str]:
    """Check that ``live_prompt`` is the template with substitutions only in declared slots.

    Returns the recovered substitutions. Substituted values may not carry
    placeholder syntax of their own.
    """
    slots = set(sig.substitution_slots)
    pattern: list[str] = []
    seen: set[str] = set()
    pos = 0
    for m in PLACEHOLDER_RE.finditer(sig.prompt_template):
        pattern.append(re.escape(sig.prompt_template[pos:m.start()]))
        name = m.group(1)
        if name not in slots:
            pattern.append(re.escape(m.group(0)))
        elif name in seen:
            pattern.append(f"(?P={name})")
        else:
            pattern.append(f"(?P<{name}>.*?)")
            seen.add(name)
        pos = m.end()
    pattern.append(re.escape(sig.prompt_template[pos:]))
    match = re.fullmatch("".join(pattern), live_prompt, flags=re.DOTALL)
    if match is None:
        raise PromptIntegrityError("live prompt deviates from the registered template")
    values = {k: v for k, v in match.groupdict().items() if v is not None}
    for name, value in values.items():
        if PLACEHOLDER_RE.search(value):
            raise PromptIntegrityError(f"substitution for {name!r} carries placeholder syntax")
    return values
