"""Scripted stand-ins for the four LLM agents of the vulnerability-patching client.

Each agent replays canned outputs; nothing calls a model. An agent object is
its own bridge anchor, so every API call must be issued from one of its methods.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass
from typing import Any, Optional, Protocol

import httpx

from ajwt.core.agent import AgentSignature, ToolDescriptor, render_prompt
from ajwt.shim.tracker import WorkflowTracker

SCRIPTED_CONFIG = {"model": "scripted-1", "temperature": 0, "max_tokens": 1024}


def _sig(template: str, slots: list[str], tools: list[tuple[str, str, str]]) -> AgentSignature:
    return AgentSignature(
        prompt_template=template,
        substitution_slots=slots,
        tools=[ToolDescriptor(name, signature, description) for name, signature, description in tools],
        config=dict(SCRIPTED_CONFIG),
    )


AGENT_SIGNATURES: dict[str, AgentSignature] = {
    "supervisor": _sig(
        "You coordinate the remediation of {repository}. Hand each step to the planner, "
        "classifier or patcher and never call external APIs yourself.",
        ["repository"],
        [("route_step", "(step: str, agent: str) -> None", "Assign a workflow step to an agent")],
    ),
    "planner": _sig(
        "You plan dependency audits for {repository}. Read the manifests and decide which "
        "packages to look up. Current focus: {focus}.",
        ["repository", "focus"],
        [
            ("read_manifests", "(repository: str) -> list[dict]", "List dependency manifests"),
            ("query_advisories", "(ecosystem: str, packages: list[str]) -> list[dict]", "Look up advisories"),
        ],
    ),
    "classifier": _sig(
        "You classify the package ecosystem of the manifest {manifest}. Answer with one ecosystem name.",
        ["manifest"],
        [("list_ecosystems", "() -> list[str]", "Known vulnerability database ecosystems")],
    ),
    "patcher": _sig(
        "You write the minimal patch fixing {advisory} in {repository} and open it against {branch}.",
        ["advisory", "repository", "branch"],
        [("open_patch", "(repository: str, diff: str, branch: str) -> str", "Open a patch request")],
    ),
}

# the canned plan: (step, agent, method, path, body, prompt values)
CANNED_PLAN: list[tuple[str, str, str, str, Optional[dict[str, Any]], dict[str, str]]] = [
    ("fetch_manifests", "planner", "GET", "/repo/manifests", None,
     {"repository": "example/project", "focus": "runtime dependencies"}),
    ("classify_ecosystem", "classifier", "GET", "/vulndb/ecosystems", None,
     {"manifest": "requirements.txt"}),
    ("query_vulnerabilities", "planner", "POST", "/vulndb/query",
     {"ecosystem": "PyPI", "packages": ["requests==2.19.0", "jinja2==2.10"]},
     {"repository": "example/project", "focus": "PyPI advisories"}),
    ("apply_patch", "patcher", "POST", "/repo/patches",
     {"repository": "example/project", "branch": "main", "diff": "-requests==2.19.0\n+requests==2.32.3\n"},
     {"advisory": "GHSA-x84v-xcm2-53pg", "repository": "example/project", "branch": "main"}),
]


class Runtime(Protocol):
    """How an agent's API call leaves the process: through the shim or as a plain bearer call."""

    def send(
        self,
        agent: "ScriptedAgent",
        tracker: Optional[WorkflowTracker],
        method: str,
        path: str,
        body: Optional[dict[str, Any]],
        prompt: Optional[str],
        scope: Optional[str],
    ) -> httpx.Response: ...


@dataclass(eq=False)
class ScriptedAgent:
    agent_id: str
    signature: AgentSignature

    def prompt(self, **values: str) -> str:
        return render_prompt(self.signature, **values)

    def perform(
        self,
        runtime: Runtime,
        tracker: Optional[WorkflowTracker],
        method: str,
        path: str,
        body: Optional[dict[str, Any]] = None,
        prompt: Optional[str] = None,
        scope: Optional[str] = None,
    ) -> httpx.Response:
        return runtime.send(self, tracker, method, path, body, prompt, scope)


class CloneAgent(ScriptedAgent):
    """Byte-identical copy of another agent's declared signature, never registered as an anchor."""


def build_agents() -> dict[str, ScriptedAgent]:
    return {agent_id: ScriptedAgent(agent_id, copy.deepcopy(sig)) for agent_id, sig in AGENT_SIGNATURES.items()}
