"""The client shim: agent verification, intent-token acquisition and signed dispatch."""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, Sequence

import httpx

from ajwt import reasons
from ajwt.core.agent import AgentSignature, PromptIntegrityError, agent_checksum, validate_prompt
from ajwt.core.canonical import b64url_encode, canonical_json, compute_step_sequence_hash
from ajwt.core.pop import PopKeyPair, content_digest, sign_http_request
from ajwt.core.tokens import decode_unverified
from ajwt.idp.service import TokenRequest
from ajwt.shim.bridge import BridgeError, BridgeIdentifier, BridgeRegistry
from ajwt.shim.config import ShimConfig
from ajwt.shim.tracker import WorkflowTracker

logger = logging.getLogger(__name__)

SHIM_VERSION = "1.0.0"
PACKAGE_ROOT = Path(__file__).resolve().parent


class ShimRefusal(Exception):
    """Raised locally; nothing was sent over the network."""

    def __init__(self, reason: str, message: str = ""):
        super().__init__(message or reason)
        self.reason = reason


class TokenDenied(Exception):
    def __init__(self, reason: str, status: int, body: Any = None):
        super().__init__(f"token request denied: {reason}")
        self.reason = reason
        self.status = status
        self.body = body


class ResourceDenied(Exception):
    def __init__(self, reason: Optional[str], status: int, body: Any = None):
        super().__init__(f"resource server returned {status}: {reason}")
        self.reason = reason
        self.status = status
        self.body = body


def shim_self_checksum(artifact_root: Optional[Path] = None) -> str:
    """Digest over every ``.py`` file of the shim package, framed as ``path NUL length NUL bytes``."""
    root = Path(artifact_root) if artifact_root is not None else PACKAGE_ROOT
    h = hashlib.sha256()
    for path in sorted(p for p in root.rglob("*.py") if "__pycache__" not in p.parts):
        data = path.read_bytes()
        h.update(path.relative_to(root).as_posix().encode("utf-8") + b"\0" + str(len(data)).encode() + b"\0")
        h.update(data)
    return "sha256:" + h.hexdigest()


@dataclass
class AgentContext:
    """Everything the shim knows about one local agent.

    ``signature`` is the live object the agent runs with; the checksum sent to
    the IDP is always recomputed from it.
    """

    agent_id: str
    signature: AgentSignature
    pop_keys: PopKeyPair
    anchor: Any
    bridge: Optional[BridgeIdentifier] = None
    registered_signature: Optional[AgentSignature] = field(default=None, repr=False)


@dataclass
class VerificationReport:
    mismatches: dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def startup_verify(agents: Sequence[AgentContext], registry_view: Mapping[str, str]) -> VerificationReport:
    """Compare each local agent's recomputed checksum against the registered one."""
    report = VerificationReport()
    for ctx in agents:
        registered = registry_view.get(ctx.agent_id)
        if registered is None:
            report.mismatches[ctx.agent_id] = "unregistered"
        elif str(agent_checksum(ctx.signature)) != registered:
            report.mismatches[ctx.agent_id] = "checksum_drift"
    return report


def _error_reason(resp: httpx.Response) -> tuple[Optional[str], Any]:
    try:
        body = resp.json()
    except ValueError:
        return None, resp.text
    return (body.get("reason") if isinstance(body, dict) else None), body


class Shim:
    def __init__(
        self,
        config: ShimConfig,
        http: httpx.Client,
        clock: Callable[[], float] = time.time,
        artifact_root: Optional[Path] = None,
    ):
        self.config = config
        self.http = http
        self.clock = clock
        self.bridges = BridgeRegistry()
        self.self_checksum = shim_self_checksum(artifact_root)
        self.idp_requests = 0
        self.started = False
        self._secret = config.resolve_secret()
        self._cache: dict[tuple, tuple[str, int]] = {}
        self._cache_lock = threading.Lock()
        self._fill_locks: dict[tuple, threading.Lock] = {}

    # -- startup -----------------------------------------------------------------

    def released_versions(self) -> dict[str, str]:
        resp = self.http.get(f"{self.config.idp_url}/.well-known/shim-versions")
        resp.raise_for_status()
        return dict(resp.json())

    def start(self, agents: Sequence[AgentContext], registry_view: Mapping[str, str]) -> VerificationReport:
        """Refuse to serve unless this shim build is released and every agent matches its registration."""
        if self.self_checksum not in self.released_versions().values():
            raise ShimRefusal(reasons.SHIM_NOT_RELEASED, f"shim checksum {self.self_checksum} is not released")
        report = startup_verify(agents, registry_view)
        if not report.ok:
            raise ShimRefusal(reasons.AGENT_CHECKSUM_DRIFT, f"agent verification failed: {report.mismatches}")
        for ctx in agents:
            ctx.bridge = self.bridges.register(ctx.anchor, ctx.agent_id, registry_view[ctx.agent_id])
            ctx.registered_signature = copy.deepcopy(ctx.signature)
        self.bridges.freeze()
        self.started = True
        return report

    def new_workflow(self, workflow_id: str, initiator: str) -> WorkflowTracker:
        return WorkflowTracker(workflow_id, initiator)

    # -- identity ----------------------------------------------------------------

    def identity_request(
        self,
        ctx: AgentContext,
        tracker: WorkflowTracker,
        execution_context: Optional[Mapping[str, str]] = None,
        scope: Optional[str] = None,
    ) -> TokenRequest:
        """Resolve the calling anchor on the stack, recompute the live checksum and assemble the grant request.

        Claims come only from the tracker and the agent context.
        """
        step = tracker.current_step
        if step is None:
            raise ShimRefusal(reasons.NO_WORKFLOW_STEP, "no workflow step is being tracked")
        bridge = self.bridges.find_on_stack()
        try:
            self.bridges.resolve_runtime_checksum(bridge, ctx.agent_id)
        except BridgeError as exc:
            raise ShimRefusal(exc.reason, str(exc)) from exc
        if ctx.agent_id != tracker.current_agent:
            raise ShimRefusal(
                reasons.EXECUTOR_MISMATCH, f"step {step!r} is tracked for {tracker.current_agent!r}, not {ctx.agent_id!r}"
            )
        return TokenRequest(
            client_id=self.config.client_id,
            client_secret=self._secret,
            agent_id=ctx.agent_id,
            runtime_checksum=str(agent_checksum(ctx.signature)),
            workflow_id=tracker.workflow_id,
            workflow_step=step,
            executed_steps=tracker.prior_steps,
            delegation_chain=list(tracker.delegation_chain),
            execution_context=dict(execution_context or {}),
            shim_checksum=self.self_checksum,
            scope=scope,
        )

    # -- tokens ------------------------------------------------------------------

    @staticmethod
    def _cache_key(req: TokenRequest) -> tuple:
        return (
            req.agent_id,
            req.workflow_id,
            req.workflow_step,
            str(compute_step_sequence_hash(req.executed_steps)),
            tuple(req.delegation_chain),
            tuple(sorted(req.execution_context.items())),
            req.scope,
        )

    def _cached(self, key: tuple) -> Optional[str]:
        with self._cache_lock:
            hit = self._cache.get(key)
            if hit is not None and hit[1] - self.clock() >= self.config.cache_margin:
                return hit[0]
            self._cache.pop(key, None)
            return None

    def acquire_intent_token(self, request: TokenRequest) -> str:
        """Serve from cache while at least ``cache_margin`` seconds remain, else ask the IDP."""
        key = self._cache_key(request)
        token = self._cached(key)
        if token is not None:
            return token
        with self._cache_lock:
            fill_lock = self._fill_locks.setdefault(key, threading.Lock())
        with fill_lock:
            token = self._cached(key)
            if token is not None:
                return token
            self.idp_requests += 1
            resp = self.http.post(
                f"{self.config.idp_url}/token",
                json=request.to_dict(),
                headers={"X-Shim-Checksum": self.self_checksum},
            )
            if resp.status_code != 200:
                reason, body = _error_reason(resp)
                raise TokenDenied(reason or "invalid_response", resp.status_code, body)
            token = resp.json()["access_token"]
            _, payload = decode_unverified(token)
            with self._cache_lock:
                self._cache[key] = (token, int(payload["exp"]))
            return token

    def _consume(self, request: TokenRequest) -> None:
        with self._cache_lock:
            self._cache.pop(self._cache_key(request), None)

    # -- dispatch ----------------------------------------------------------------

    def call_api(
        self,
        ctx: AgentContext,
        tracker: WorkflowTracker,
        method: str,
        url: str,
        *,
        json_body: Any = None,
        prompt: Optional[str] = None,
        execution_context: Optional[Mapping[str, str]] = None,
        scope: Optional[str] = None,
    ) -> httpx.Response:
        """Mint (or reuse) an intent token for the tracked step, sign the request with the agent's PoP key and send it."""
        if not self.started:
            raise ShimRefusal(reasons.SHIM_NOT_RELEASED, "shim has not completed startup verification")
        request = self.identity_request(ctx, tracker, execution_context, scope)
        if prompt is not None:
            template = ctx.registered_signature or ctx.signature
            try:
                validate_prompt(template, prompt)
            except PromptIntegrityError as exc:
                raise ShimRefusal(reasons.PROMPT_TEMPLATE_VIOLATION, str(exc)) from exc
        token = self.acquire_intent_token(request)
        body = b"" if json_body is None else canonical_json(json_body)
        headers = self.signed_headers(method, url, token, body, ctx.pop_keys)
        if json_body is not None:
            headers["Content-Type"] = "application/json"
        try:
            resp = self.http.request(method, url, headers=headers, content=body)
        finally:
            # intent tokens are single-use at the resource server
            self._consume(request)
        if resp.status_code >= 400:
            reason, payload = _error_reason(resp)
            raise ResourceDenied(reason, resp.status_code, payload)
        return resp

    def signed_headers(self, method: str, url: str, token: str, body: bytes, key: PopKeyPair) -> dict[str, str]:
        headers = {
            "Authorization": f"Bearer {token}",
            "X-Shim-Checksum": self.self_checksum,
            "Content-Digest": content_digest(body),
            "Signature-Key": b64url_encode(canonical_json(key.public_jwk())),
        }
        target = httpx.URL(url).raw_path.decode("ascii")
        sig_input, sig = sign_http_request(
            method, target, headers, headers["Content-Digest"], key, int(self.clock())
        )
        headers["Signature-Input"] = sig_input
        headers["Signature"] = sig
        return headers
