"""Canonical byte encoding and SHA-256 checksums.

Every structure that gets hashed or MAC'd in this package goes through
:func:`canonical_json` first. The layout is normative and documented in
``docs/canonical-encoding.md``.
"""

from __future__ import annotations

import base64
import hashlib
import json
import re
from dataclasses import dataclass
from typing import Any

CHECKSUM_ALGORITHM = "sha256"
_HEX_RE = re.compile(r"^[0-9a-f]{64}$")


def canonical_json(obj: Any) -> bytes:
    """Sorted keys, no insignificant whitespace, UTF-8, no NaN/Infinity."""
    return json.dumps(
        obj,
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
        allow_nan=False,
    ).encode("utf-8")


def b64url_encode(data: bytes) -> str:
    return base64.urlsafe_b64encode(data).rstrip(b"=").decode("ascii")


def b64url_decode(text: str) -> bytes:
    if not isinstance(text, str) or not re.fullmatch(r"[A-Za-z0-9_-]*", text):
        raise ValueError("not base64url text")
    if len(text) % 4 == 1:
        raise ValueError("invalid base64url length")
    return base64.urlsafe_b64decode(text + "=" * (-len(text) % 4))


@dataclass(frozen=True)
class Checksum:
    """A SHA-256 digest rendered as ``sha256:<lowercase hex>``."""

    digest: bytes
    algorithm: str = CHECKSUM_ALGORITHM

    def __post_init__(self) -> None:
        if self.algorithm != CHECKSUM_ALGORITHM:
            raise ValueError(f"unsupported checksum algorithm {self.algorithm!r}")
        if not isinstance(self.digest, bytes) or len(self.digest) != 32:
            raise ValueError("checksum digest must be exactly 32 bytes")

    def __str__(self) -> str:
        return f"{self.algorithm}:{self.digest.hex()}"

    @property
    def hex(self) -> str:
        return self.digest.hex()

    @classmethod
    def parse(cls, text: str) -> "Checksum":
        """Parse ``sha256:<hex>``; the space-separated header form is accepted too."""
        if not isinstance(text, str):
            raise ValueError("checksum must be text")
        algorithm, sep, hexdigest = text.strip().partition(":")
        if not sep:
            algorithm, sep, hexdigest = text.strip().partition(" ")
        if not sep or algorithm != CHECKSUM_ALGORITHM or not _HEX_RE.match(hexdigest.strip()):
            raise ValueError(f"malformed checksum {text!r}")
        return cls(bytes.fromhex(hexdigest.strip()))


def compute_checksum(data: bytes) -> Checksum:
    return Checksum(hashlib.sha256(data).digest())


def compute_step_sequence_hash(executed_steps: list[str]) -> Checksum:
    """Hash of the executed step ids, in execution order."""
    return compute_checksum(canonical_json(list(executed_steps)))
