"""One self-contained deployment per scenario: IDP, resource server, client application."""

from __future__ import annotations

import random
import threading
from dataclasses import dataclass, field
from typing import Any, Optional

import httpx

from ajwt.core.agent import agent_checksum
from ajwt.core.canonical import compute_checksum
from ajwt.core.pop import PopKeyPair, generate_pop_keypair
from ajwt.core.tokens import IssuerKey, generate_issuer_key
from ajwt.harness.agents import CANNED_PLAN, ScriptedAgent, build_agents
from ajwt.harness.mock_api import WORKFLOW_ID, create_mock_api, default_policy, workflow_definition
from ajwt.idp.app import create_idp_app
from ajwt.idp.service import IdentityProvider, IdpConfig
from ajwt.rs.server import IdpTrust, ResourceServer
from ajwt.rs.verifier import VerifierConfig
from ajwt.shim.client import SHIM_VERSION, AgentContext, Shim, shim_self_checksum
from ajwt.shim.config import ShimConfig
from ajwt.shim.legacy import LegacyClient
from ajwt.shim.tracker import WorkflowTracker, track_step
from ajwt.shim.transport import RoutingTransport

IDP_HOST = "idp.example.com"
API_HOST = "api.example.com"
IDP_URL = f"http://{IDP_HOST}"
API_URL = f"http://{API_HOST}"
ISSUER = "https://idp.example.com"
AUDIENCE = "api.example.com"
START_TIME = 1719570900
ADMIN_GRANT = "grant-remediation-admin"
CLIENT_SCOPES = frozenset({"repo:read", "repo:write", "vulndb:read"})
CLIENT_BUILD = b"vuln-remediation-client 1.0.0"

PHASES = ("before", "after")


class HarnessError(RuntimeError):
    """The scenario set-up itself failed; not an attack outcome."""


class FakeClock:
    def __init__(self, start: float = START_TIME):
        self._now = float(start)
        self._lock = threading.Lock()

    def __call__(self) -> float:
        with self._lock:
            return self._now

    def advance(self, seconds: float) -> None:
        with self._lock:
            self._now += seconds


class ShimRuntime:
    def __init__(self, shim: Shim, contexts: dict[str, AgentContext], execution_context: dict[str, str]):
        self.shim = shim
        self.contexts = contexts
        self.execution_context = execution_context

    def send(self, agent, tracker, method, path, body, prompt, scope) -> httpx.Response:
        return self.shim.call_api(
            self.contexts[agent.agent_id],
            tracker,
            method,
            API_URL + path,
            json_body=body,
            prompt=prompt,
            execution_context=self.execution_context,
            scope=scope,
        )


class LegacyRuntime:
    def __init__(self, client: LegacyClient):
        self.client = client

    def send(self, agent, tracker, method, path, body, prompt, scope) -> httpx.Response:
        return self.client.call(method, API_URL + path, json_body=body)


@dataclass
class HarnessEnv:
    phase: str
    seed: int
    rng: random.Random
    clock: FakeClock
    idp: IdentityProvider
    rs: ResourceServer
    http: httpx.Client
    client_id: str
    client_secret: str
    agents: dict[str, ScriptedAgent]
    pop_keys: dict[str, PopKeyPair]
    registry_view: dict[str, str]
    legacy: LegacyClient
    shim: Optional[Shim] = None
    contexts: dict[str, AgentContext] = field(default_factory=dict)
    captured: list[httpx.Request] = field(default_factory=list)
    execution_context: dict[str, str] = field(
        default_factory=lambda: {"repository": "example/project", "branch": "main", "commit": "abc123"}
    )

    @property
    def runtime(self) -> Any:
        if self.phase == "after":
            assert self.shim is not None
            return ShimRuntime(self.shim, self.contexts, self.execution_context)
        return LegacyRuntime(self.legacy)

    def new_tracker(self, initiator: str = "supervisor") -> WorkflowTracker:
        return WorkflowTracker(WORKFLOW_ID, initiator)

    def run_plan(self, tracker: Optional[WorkflowTracker], steps: int) -> list[httpx.Response]:
        """Execute the first ``steps`` canned steps legitimately."""
        out = []
        for step, agent_id, method, path, body, values in CANNED_PLAN[:steps]:
            agent = self.agents[agent_id]
            if tracker is not None:
                track_step(tracker, step, agent_id)
            resp = agent.perform(self.runtime, tracker, method, path, body, prompt=agent.prompt(**values))
            if not resp.is_success:
                raise HarnessError(f"legitimate step {step} failed with {resp.status_code}: {resp.text}")
            out.append(resp)
        return out

    def evidence(self) -> dict[str, Any]:
        return {
            "idp_events": [e.to_dict() for e in self.idp.store.log],
            "rs_decisions": [e.to_dict() for e in self.rs.log],
            "idp_log_valid": self.idp.verify_log_integrity(),
            "rs_log_valid": self.rs.verify_log_integrity(),
        }

    def close(self) -> None:
        self.http.close()


def _check(resp: httpx.Response, what: str) -> dict[str, Any]:
    if resp.status_code not in (200, 201):
        raise HarnessError(f"{what} failed with {resp.status_code}: {resp.text}")
    return resp.json()


def build_env(phase: str, seed: int = 0, issuer_key: Optional[IssuerKey] = None) -> HarnessEnv:
    """Register everything over HTTP and, in the after phase, start the shim."""
    if phase not in PHASES:
        raise ValueError(f"phase must be one of {PHASES}, got {phase!r}")
    rng = random.Random(seed)
    clock = FakeClock()
    idp = IdentityProvider(
        IdpConfig(
            issuer=ISSUER,
            audience=AUDIENCE,
            grants={ADMIN_GRANT: set(CLIENT_SCOPES)},
            chain_key=rng.randbytes(32),
            seed=rng.getrandbits(32),
        ),
        issuer_key=issuer_key or generate_issuer_key(),
        clock=clock,
    )
    idp.publish_shim_version(SHIM_VERSION, shim_self_checksum())

    trust = IdpTrust(None, IDP_URL, ttl=300, clock=clock)  # type: ignore[arg-type]
    rs = ResourceServer(
        default_policy(), trust, VerifierConfig(ISSUER, AUDIENCE, enforce_intent=phase == "after"), clock=clock
    )
    captured: list[httpx.Request] = []

    def capture(request: httpx.Request) -> None:
        if request.url.host == API_HOST:
            captured.append(request)

    http = httpx.Client(
        transport=RoutingTransport({IDP_HOST: create_idp_app(idp), API_HOST: create_mock_api(rs)}),
        event_hooks={"request": [capture]},
    )
    trust.http = http

    client = _check(
        http.post(f"{IDP_URL}/clients", json={"authorization_grant": ADMIN_GRANT, "client_checksum": str(compute_checksum(CLIENT_BUILD))}),
        "client registration",
    )
    agents = build_agents()
    pop_keys: dict[str, PopKeyPair] = {}
    registry_view: dict[str, str] = {}
    for agent_id, agent in agents.items():
        pop_keys[agent_id] = generate_pop_keypair(agent_id, START_TIME, seed=rng.randbytes(32))
        rec = _check(
            http.post(
                f"{IDP_URL}/agents",
                json={
                    "client_id": client["client_id"],
                    "authorization_grant": ADMIN_GRANT,
                    "agent_id": agent_id,
                    "agent_signature": agent.signature.to_dict(),
                    "pop_public_jwk": pop_keys[agent_id].public_jwk(),
                    "version": "1.0.0",
                },
            ),
            f"registration of {agent_id}",
        )
        if rec["agent_checksum"] != str(agent_checksum(agent.signature)):
            raise HarnessError(f"IDP computed a different checksum for {agent_id}")
        registry_view[agent_id] = rec["agent_checksum"]
    _check(
        http.post(
            f"{IDP_URL}/workflows",
            json={"client_id": client["client_id"], "authorization_grant": ADMIN_GRANT, "definition": workflow_definition()},
        ),
        "workflow registration",
    )

    legacy = LegacyClient(http, IDP_URL, client["client_id"], client["client_secret"], clock=clock)
    env = HarnessEnv(
        phase=phase,
        seed=seed,
        rng=rng,
        clock=clock,
        idp=idp,
        rs=rs,
        http=http,
        client_id=client["client_id"],
        client_secret=client["client_secret"],
        agents=agents,
        pop_keys=pop_keys,
        registry_view=registry_view,
        legacy=legacy,
        captured=captured,
    )
    if phase == "after":
        env.shim = Shim(ShimConfig(IDP_URL, env.client_id, env.client_secret), http, clock=clock)
        env.contexts = {
            agent_id: AgentContext(agent_id, agent.signature, pop_keys[agent_id], anchor=agent)
            for agent_id, agent in agents.items()
        }
        env.shim.start(list(env.contexts.values()), registry_view)
    return env
