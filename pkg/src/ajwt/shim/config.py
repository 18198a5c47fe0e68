"""Shim configuration from a JSON file or ``AJWT_SHIM_*`` environment variables."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Optional

ENV_PREFIX = "AJWT_SHIM_"


@dataclass
class ShimConfig:
    idp_url: str
    client_id: str
    # the secret itself, or the name of an environment variable holding it when prefixed with "env:"
    client_secret: str
    cache_margin: int = 5
    shim_version: str = "1.0.0"

    def resolve_secret(self, environ: Optional[Mapping[str, str]] = None) -> str:
        if self.client_secret.startswith("env:"):
            name = self.client_secret[4:]
            env = os.environ if environ is None else environ
            if name not in env:
                raise KeyError(f"credential variable {name} is not set")
            return env[name]
        return self.client_secret

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ShimConfig":
        return cls(
            idp_url=str(data["idp_url"]).rstrip("/"),
            client_id=str(data["client_id"]),
            client_secret=str(data["client_secret"]),
            cache_margin=int(data.get("cache_margin", 5)),
            shim_version=str(data.get("shim_version", "1.0.0")),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ShimConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "ShimConfig":
        env = os.environ if environ is None else environ
        data = {k[len(ENV_PREFIX) :].lower(): v for k, v in env.items() if k.startswith(ENV_PREFIX)}
        return cls.from_dict(data)
