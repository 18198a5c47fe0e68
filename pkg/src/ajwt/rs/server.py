"""Resource-server wiring: trust material sources, decision log and the ASGI enforcement layer."""

from __future__ import annotations

import json
import logging
import threading
import time
from typing import Any, Awaitable, Callable, Mapping, MutableMapping, Optional, Protocol

import anyio
import httpx
from cryptography.hazmat.primitives.asymmetric import rsa

from ajwt.audit import HashChainLog
from ajwt.core.tokens import keys_from_jwks
from ajwt.rs.policy import PolicyDocument
from ajwt.rs.replay import ReplayCache
from ajwt.rs.verifier import Decision, RequestView, VerifierConfig, verify_request

logger = logging.getLogger(__name__)

Scope = MutableMapping[str, Any]
Receive = Callable[[], Awaitable[MutableMapping[str, Any]]]
Send = Callable[[MutableMapping[str, Any]], Awaitable[None]]


class TrustSource(Protocol):
    def issuer_keys(self) -> Mapping[str, rsa.RSAPublicKey]: ...

    def shim_versions(self) -> Mapping[str, str]: ...


class StaticTrust:
    def __init__(self, issuer_keys: Mapping[str, rsa.RSAPublicKey], shim_versions: Mapping[str, str]):
        self._keys = dict(issuer_keys)
        self._shims = dict(shim_versions)

    def issuer_keys(self) -> Mapping[str, rsa.RSAPublicKey]:
        return self._keys

    def shim_versions(self) -> Mapping[str, str]:
        return self._shims


class IdpTrust:
    """Fetches ``/.well-known/jwks`` and ``/.well-known/shim-versions`` and caches each for ``ttl`` seconds."""

    def __init__(self, http: httpx.Client, idp_url: str, ttl: float = 300.0, clock: Callable[[], float] = time.time):
        self.http = http
        self.idp_url = idp_url.rstrip("/")
        self.ttl = ttl
        self.clock = clock
        self._lock = threading.Lock()
        self._cache: dict[str, tuple[float, Any]] = {}

    def _get(self, path: str, convert: Callable[[Any], Any]) -> Any:
        with self._lock:
            hit = self._cache.get(path)
            if hit is not None and self.clock() - hit[0] < self.ttl:
                return hit[1]
        resp = self.http.get(self.idp_url + path)
        resp.raise_for_status()
        value = convert(resp.json())
        with self._lock:
            self._cache[path] = (self.clock(), value)
        return value

    def issuer_keys(self) -> Mapping[str, rsa.RSAPublicKey]:
        return self._get("/.well-known/jwks", keys_from_jwks)

    def shim_versions(self) -> Mapping[str, str]:
        return self._get("/.well-known/shim-versions", lambda d: {str(k): str(v) for k, v in d.items()})

    def invalidate(self) -> None:
        with self._lock:
            self._cache.clear()


class ResourceServer:
    """Policy lookup, verification and an append-only record of every decision."""

    def __init__(
        self,
        policy: PolicyDocument,
        trust: TrustSource,
        config: VerifierConfig,
        clock: Callable[[], float] = time.time,
        replay_cache: Optional[ReplayCache] = None,
    ):
        self.policy = policy
        self.trust = trust
        self.config = config
        self.clock = clock
        self.replay_cache = replay_cache if replay_cache is not None else ReplayCache()
        self.log = HashChainLog()

    def decide(self, request: RequestView) -> Optional[Decision]:
        """``None`` when no policy covers the route."""
        endpoint = self.policy.find(request.method, request.path)
        if endpoint is None:
            return None
        now = int(self.clock())
        try:
            keys = self.trust.issuer_keys()
            shims = self.trust.shim_versions()
        except Exception:  # trust material unavailable: nothing can verify
            logger.exception("trust material unavailable")
            keys, shims = {}, {}
        decision = verify_request(request, endpoint, keys, shims, now, self.config, self.replay_cache)
        self.record(request, decision, now)
        return decision

    def record(self, request: RequestView, decision: Decision, now: int) -> None:
        body: dict[str, Any] = {
            "method": request.method,
            "path": request.path,
            "outcome": "allow" if decision.allow else f"deny:{decision.reason}",
        }
        claims = decision.claims
        if claims is not None:
            body["jti"] = claims.jti
            body["sub"] = claims.sub
            if claims.intent is not None:
                body["workflow_id"] = claims.intent.workflow_id
                body["step"] = claims.intent.workflow_step
                body["executed_by"] = claims.intent.executed_by
        self.log.append(body, timestamp=now)

    def verify_log_integrity(self) -> bool:
        return self.log.verify()


def _json_response(status: int, payload: Mapping[str, Any], extra_headers: Optional[list[tuple[bytes, bytes]]] = None):
    body = json.dumps(payload).encode("utf-8")
    headers = [(b"content-type", b"application/json"), (b"content-length", str(len(body)).encode())]
    return status, headers + (extra_headers or []), body


class PolicyEnforcementMiddleware:
    """ASGI layer that runs :meth:`ResourceServer.decide` before any handler.

    Allowed requests reach the app with the verified claims in ``request.state.claims``.
    """

    def __init__(self, app: Callable[[Scope, Receive, Send], Awaitable[None]], server: ResourceServer):
        self.app = app
        self.server = server

    async def __call__(self, scope: Scope, receive: Receive, send: Send) -> None:
        if scope["type"] != "http":
            await self.app(scope, receive, send)
            return
        chunks = []
        while True:
            message = await receive()
            if message["type"] == "http.disconnect":
                return
            chunks.append(message.get("body", b""))
            if not message.get("more_body", False):
                break
        body = b"".join(chunks)
        raw_path = scope.get("raw_path") or scope["path"].encode("utf-8")
        target = raw_path.decode("latin-1")
        if scope.get("query_string"):
            target += "?" + scope["query_string"].decode("latin-1")
        headers = {k.decode("latin-1"): v.decode("latin-1") for k, v in scope["headers"]}
        view = RequestView.build(scope["method"], target, headers, body)

        # verification may fetch trust material over blocking HTTP; keep it off the event loop
        decision = await anyio.to_thread.run_sync(self.server.decide, view)
        if decision is None:
            await self._respond(send, *_json_response(404, {"error": "not_found"}))
            return
        if not decision.allow:
            error = "invalid_token" if decision.status == 401 else "access_denied"
            extra = [(b"www-authenticate", f'Bearer error="{error}"'.encode())] if decision.status == 401 else []
            await self._respond(send, *_json_response(decision.status, {"error": error, "reason": decision.reason}, extra))
            return

        scope.setdefault("state", {})["claims"] = decision.claims
        sent = False

        async def replay_body() -> MutableMapping[str, Any]:
            nonlocal sent
            if sent:
                return await receive()
            sent = True
            return {"type": "http.request", "body": body, "more_body": False}

        await self.app(scope, replay_body, send)

    @staticmethod
    async def _respond(send: Send, status: int, headers: list[tuple[bytes, bytes]], body: bytes) -> None:
        await send({"type": "http.response.start", "status": status, "headers": headers})
        await send({"type": "http.response.body", "body": body})
