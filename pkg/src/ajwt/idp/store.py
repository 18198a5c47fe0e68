"""Registration records and the two store backends (in-memory, single JSON file)."""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Optional

from ajwt.audit import HashChainLog
from ajwt.idp.workflow import WorkflowDefinition


@dataclass
class ClientRecord:
    client_id: str
    client_checksum: str
    granted_scopes: set[str]
    client_secret_hash: str
    grant_hash: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "client_id": self.client_id,
            "client_checksum": self.client_checksum,
            "granted_scopes": sorted(self.granted_scopes),
            "client_secret_hash": self.client_secret_hash,
            "grant_hash": self.grant_hash,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ClientRecord":
        return cls(d["client_id"], d["client_checksum"], set(d["granted_scopes"]), d["client_secret_hash"], d["grant_hash"])


@dataclass
class AgentRecord:
    agent_id: str
    client_id: str
    agent_checksum: str
    pop_public_jwk: dict[str, str]
    registration_id: str
    version: str
    created_at: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "agent_id": self.agent_id,
            "client_id": self.client_id,
            "agent_checksum": self.agent_checksum,
            "pop_public_jwk": dict(self.pop_public_jwk),
            "registration_id": self.registration_id,
            "version": self.version,
            "created_at": self.created_at,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "AgentRecord":
        return cls(
            d["agent_id"], d["client_id"], d["agent_checksum"], dict(d["pop_public_jwk"]),
            d["registration_id"], d["version"], d["created_at"],
        )


class RegistrationStore:
    """In-memory store. Agent and workflow registrations keep every version; the last one is active.

    Callers serialize mutations and call :meth:`commit` after each one.
    """

    def __init__(self) -> None:
        self.clients: dict[str, ClientRecord] = {}
        self.agents: dict[str, list[AgentRecord]] = {}
        self.workflows: dict[str, list[WorkflowDefinition]] = {}
        self.shim_versions: dict[str, str] = {}
        self.log = HashChainLog()

    @staticmethod
    def _key(client_id: str, item_id: str) -> str:
        return f"{client_id}/{item_id}"

    def find_client(self, grant_hash: str, client_checksum: str) -> Optional[ClientRecord]:
        for rec in self.clients.values():
            if rec.grant_hash == grant_hash and rec.client_checksum == client_checksum:
                return rec
        return None

    def agent_versions(self, client_id: str, agent_id: str) -> list[AgentRecord]:
        return self.agents.get(self._key(client_id, agent_id), [])

    def active_agent(self, client_id: str, agent_id: str) -> Optional[AgentRecord]:
        versions = self.agent_versions(client_id, agent_id)
        return versions[-1] if versions else None

    def client_agent_ids(self, client_id: str) -> set[str]:
        return {recs[-1].agent_id for recs in self.agents.values() if recs and recs[-1].client_id == client_id}

    def all_agent_records(self, client_id: str) -> list[AgentRecord]:
        return [r for recs in self.agents.values() for r in recs if r.client_id == client_id]

    def add_agent(self, rec: AgentRecord) -> None:
        self.agents.setdefault(self._key(rec.client_id, rec.agent_id), []).append(rec)

    def workflow_versions(self, client_id: str, workflow_id: str) -> list[WorkflowDefinition]:
        return self.workflows.get(self._key(client_id, workflow_id), [])

    def active_workflow(self, client_id: str, workflow_id: str) -> Optional[WorkflowDefinition]:
        versions = self.workflow_versions(client_id, workflow_id)
        return versions[-1] if versions else None

    def add_workflow(self, defn: WorkflowDefinition) -> None:
        self.workflows.setdefault(self._key(defn.client_id, defn.workflow_id), []).append(defn)

    def commit(self) -> None:
        """Persist pending changes; nothing to do in memory."""

    def to_dict(self) -> dict[str, Any]:
        return {
            "clients": [c.to_dict() for c in self.clients.values()],
            "agents": [a.to_dict() for recs in self.agents.values() for a in recs],
            "workflows": [w.to_dict() for recs in self.workflows.values() for w in recs],
            "shim_versions": dict(self.shim_versions),
            "log": self.log.to_dict(),
        }

    def load_dict(self, data: Mapping[str, Any]) -> None:
        self.clients = {c["client_id"]: ClientRecord.from_dict(c) for c in data.get("clients", [])}
        self.agents = {}
        for a in data.get("agents", []):
            self.add_agent(AgentRecord.from_dict(a))
        self.workflows = {}
        for w in data.get("workflows", []):
            self.add_workflow(WorkflowDefinition.from_dict(w))
        self.shim_versions = dict(data.get("shim_versions", {}))
        self.log = HashChainLog.from_dict(data.get("log", {}))


MemoryStore = RegistrationStore


class FileStore(RegistrationStore):
    """Durable single-file store; every commit rewrites the file atomically."""

    def __init__(self, path: str | os.PathLike[str]) -> None:
        super().__init__()
        self.path = Path(path)
        if self.path.exists():
            self.load_dict(json.loads(self.path.read_text(encoding="utf-8")))

    def commit(self) -> None:
        self.path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(prefix=self.path.name + ".", dir=self.path.parent)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(self.to_dict(), fh, sort_keys=True)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
