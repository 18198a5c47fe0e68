"""Workflow DAG definitions and the step-transition / delegation-chain rules."""

from __future__ import annotations

from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import Any, Mapping, Sequence


class WorkflowError(ValueError):
    def __init__(self, reason: str, message: str):
        super().__init__(message)
        self.reason = reason


@dataclass
class StepDef:
    step_id: str
    allowed_agents: set[str]
    required_scopes: set[str] = field(default_factory=set)

    def to_dict(self) -> dict[str, Any]:
        return {
            "step_id": self.step_id,
            "allowed_agents": sorted(self.allowed_agents),
            "required_scopes": sorted(self.required_scopes),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "StepDef":
        return cls(str(data["step_id"]), set(data.get("allowed_agents", [])), set(data.get("required_scopes", [])))


@dataclass
class WorkflowDefinition:
    workflow_id: str
    steps: list[StepDef]
    edges: list[tuple[str, str]] = field(default_factory=list)
    client_id: str = ""
    version: int = 0
    # Agents allowed to head a delegation chain; empty means any agent of the client.
    initiators: set[str] = field(default_factory=set)

    def step(self, step_id: str) -> StepDef | None:
        for s in self.steps:
            if s.step_id == step_id:
                return s
        return None

    @property
    def step_ids(self) -> set[str]:
        return {s.step_id for s in self.steps}

    def successors(self, step_id: str) -> set[str]:
        return {b for a, b in self.edges if a == step_id}

    @property
    def sources(self) -> set[str]:
        targets = {b for _, b in self.edges}
        return self.step_ids - targets

    def to_dict(self) -> dict[str, Any]:
        return {
            "workflow_id": self.workflow_id,
            "client_id": self.client_id,
            "version": self.version,
            "steps": [s.to_dict() for s in self.steps],
            "edges": [list(e) for e in self.edges],
            "initiators": sorted(self.initiators),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "WorkflowDefinition":
        try:
            return cls(
                workflow_id=str(data["workflow_id"]),
                steps=[StepDef.from_dict(s) for s in data["steps"]],
                edges=[(str(a), str(b)) for a, b in data.get("edges", [])],
                client_id=str(data.get("client_id", "")),
                version=int(data.get("version", 0)),
                initiators=set(data.get("initiators", [])),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise WorkflowError("invalid_workflow", f"malformed workflow definition: {exc}") from exc


def validate_definition(defn: WorkflowDefinition, known_agents: set[str]) -> None:
    """Structural checks run at registration time."""
    ids = [s.step_id for s in defn.steps]
    if not ids:
        raise WorkflowError("invalid_workflow", "workflow has no steps")
    if len(ids) != len(set(ids)):
        raise WorkflowError("invalid_workflow", "duplicate step ids")
    for s in defn.steps:
        if not s.allowed_agents:
            raise WorkflowError("invalid_workflow", f"step {s.step_id!r} has no allowed agents")
        unknown = s.allowed_agents - known_agents
        if unknown:
            raise WorkflowError("unknown_agent", f"unknown agent(s) {sorted(unknown)} in step {s.step_id!r}")
    unknown = defn.initiators - known_agents
    if unknown:
        raise WorkflowError("unknown_agent", f"unknown initiator(s) {sorted(unknown)}")
    for a, b in defn.edges:
        if a not in ids or b not in ids:
            raise WorkflowError("unknown_step", f"edge ({a!r}, {b!r}) names an undefined step")
    graph: dict[str, set[str]] = {i: set() for i in ids}
    for a, b in defn.edges:
        graph[b].add(a)
    try:
        tuple(TopologicalSorter(graph).static_order())
    except CycleError as exc:
        raise WorkflowError("cycle_detected", f"workflow edges contain a cycle: {exc.args[1]}") from exc


def is_legal_transition(defn: WorkflowDefinition, executed_steps: Sequence[str], next_step: str) -> bool:
    """``executed_steps`` must be a path from a source node and ``next_step`` a direct successor of its end.

    With nothing executed yet, ``next_step`` must itself be a source.
    """
    if not executed_steps:
        return next_step in defn.sources
    if executed_steps[0] not in defn.sources:
        return False
    edges = set(defn.edges)
    path = list(executed_steps) + [next_step]
    return all((a, b) in edges for a, b in zip(path, path[1:]))


def chain_is_consistent(
    defn: WorkflowDefinition,
    chain: Sequence[str],
    executed_steps: Sequence[str],
    requester: str,
    client_agents: set[str],
) -> bool:
    """Does some executor assignment along the executed path reproduce ``chain``?

    The chain is the initiator followed by the executor of every executed
    step and finally the requester, with consecutive repeats collapsed (the
    way a workflow tracker grows it). Each executor must be an allowed agent
    of its step.
    """
    if not chain or chain[-1] != requester:
        return False
    initiators = defn.initiators or client_agents
    if chain[0] not in initiators:
        return False
    slots: list[set[str]] = []
    for step_id in executed_steps:
        step = defn.step(step_id)
        if step is None:
            return False
        slots.append(step.allowed_agents)
    slots.append({requester})
    # reachable: chain positions j such that the collapsed sequence so far equals chain[:j+1]
    reachable = {0}
    for allowed in slots:
        nxt: set[int] = set()
        for j in reachable:
            if chain[j] in allowed:
                nxt.add(j)
            if j + 1 < len(chain) and chain[j + 1] in allowed and chain[j + 1] != chain[j]:
                nxt.add(j + 1)
        reachable = nxt
        if not reachable:
            return False
    return len(chain) - 1 in reachable
