"""Authorization server: registration, the ``agent_checksum`` grant, and the workflow event log."""

from __future__ import annotations

import hashlib
import hmac
import logging
import random
import secrets
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional

from ajwt import reasons
from ajwt.core.agent import AgentSignature, SignatureError, agent_checksum
from ajwt.core.canonical import Checksum, compute_step_sequence_hash
from ajwt.core.delegation import seal_delegation_chain, verify_delegation_chain
from ajwt.core.pop import UnsupportedKeyError, public_key_from_jwk, thumbprint_b64url
from ajwt.core.tokens import (
    AgentProof,
    IntentClaims,
    IssuerKey,
    TokenClaims,
    TokenError,
    generate_issuer_key,
    jwks_document,
    mint_token,
    verify_token,
)
from ajwt.idp.store import AgentRecord, ClientRecord, RegistrationStore
from ajwt.idp.workflow import (
    WorkflowDefinition,
    WorkflowError,
    chain_is_consistent,
    is_legal_transition,
    validate_definition,
)

logger = logging.getLogger(__name__)

AGENT_CHECKSUM_GRANT = "agent_checksum"
CLIENT_CREDENTIALS_GRANT = "client_credentials"


class IdpError(Exception):
    status = 400

    def __init__(self, reason: str, message: str = "", status: Optional[int] = None):
        super().__init__(message or reason)
        self.reason = reason
        if status is not None:
            self.status = status


class RegistrationError(IdpError):
    pass


class TokenDenied(IdpError):
    status = 403


_DENIAL_STATUS = {
    reasons.UNKNOWN_CLIENT: 401,
    reasons.BAD_CLIENT_CREDENTIAL: 401,
    reasons.INVALID_REQUEST: 400,
    reasons.UNSUPPORTED_GRANT_TYPE: 400,
}


@dataclass
class IdpConfig:
    issuer: str = "https://idp.example.com"
    audience: str = "api.example.com"
    intent_token_ttl: int = 120
    access_token_ttl: int = 900
    # pre-provisioned authorization grants: grant code -> scopes it may confer
    grants: dict[str, set[str]] = field(default_factory=dict)
    chain_key: bytes = field(default_factory=lambda: secrets.token_bytes(32))
    seed: Optional[int] = None


@dataclass
class TokenRequest:
    client_id: str
    agent_id: str
    runtime_checksum: str
    workflow_id: str
    workflow_step: str
    shim_checksum: str
    delegation_chain: list[str]
    executed_steps: list[str] = field(default_factory=list)
    execution_context: dict[str, str] = field(default_factory=dict)
    client_secret: Optional[str] = None
    client_token: Optional[str] = None
    scope: Optional[str] = None
    grant_type: str = AGENT_CHECKSUM_GRANT

    def to_dict(self) -> dict[str, Any]:
        out = {
            "grant_type": self.grant_type,
            "client_id": self.client_id,
            "agent_id": self.agent_id,
            "runtime_checksum": self.runtime_checksum,
            "workflow_id": self.workflow_id,
            "workflow_step": self.workflow_step,
            "executed_steps": list(self.executed_steps),
            "delegation_chain": list(self.delegation_chain),
            "execution_context": dict(self.execution_context),
            "shim_checksum": self.shim_checksum,
        }
        for name in ("client_secret", "client_token", "scope"):
            if getattr(self, name) is not None:
                out[name] = getattr(self, name)
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TokenRequest":
        try:
            req = cls(
                grant_type=str(data["grant_type"]),
                client_id=str(data["client_id"]),
                agent_id=str(data["agent_id"]),
                runtime_checksum=str(data["runtime_checksum"]),
                workflow_id=str(data["workflow_id"]),
                workflow_step=str(data["workflow_step"]),
                shim_checksum=str(data["shim_checksum"]),
                delegation_chain=[str(a) for a in data["delegation_chain"]],
                executed_steps=[str(s) for s in data.get("executed_steps", [])],
                execution_context={str(k): str(v) for k, v in dict(data.get("execution_context", {})).items()},
                client_secret=data.get("client_secret"),
                client_token=data.get("client_token"),
                scope=data.get("scope"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TokenDenied(reasons.INVALID_REQUEST, f"malformed token request: {exc}", status=400) from exc
        if req.grant_type != AGENT_CHECKSUM_GRANT:
            raise TokenDenied(reasons.UNSUPPORTED_GRANT_TYPE, f"grant_type {req.grant_type!r}", status=400)
        if not req.delegation_chain:
            raise TokenDenied(reasons.INVALID_REQUEST, "delegation_chain must be non-empty", status=400)
        return req


def _hash_secret(secret: str) -> str:
    return hashlib.sha256(secret.encode("utf-8")).hexdigest()


class IdentityProvider:
    """The trusted issuer. All mutations and log appends happen under one lock."""

    def __init__(
        self,
        config: IdpConfig,
        store: Optional[RegistrationStore] = None,
        issuer_key: Optional[IssuerKey] = None,
        clock: Callable[[], float] = time.time,
    ):
        self.config = config
        self.store = store if store is not None else RegistrationStore()
        self.issuer_key = issuer_key or generate_issuer_key()
        self.clock = clock
        self._lock = threading.RLock()
        self._rng = random.Random(config.seed) if config.seed is not None else None

    # -- helpers -----------------------------------------------------------

    def _now(self) -> int:
        return int(self.clock())

    def _token_hex(self, nbytes: int) -> str:
        if self._rng is not None:
            return self._rng.randbytes(nbytes).hex()
        return secrets.token_hex(nbytes)

    def _client_for_grant(self, client_id: str, authorization_grant: str, client_checksum: Optional[str]) -> ClientRecord:
        client = self.store.clients.get(client_id)
        if client is None:
            raise RegistrationError(reasons.UNKNOWN_CLIENT, f"unknown client {client_id!r}", status=404)
        if not hmac.compare_digest(client.grant_hash, _hash_secret(str(authorization_grant))):
            raise RegistrationError(reasons.INVALID_GRANT, "authorization grant does not match client", status=403)
        if client_checksum is not None and client_checksum != client.client_checksum:
            raise RegistrationError(reasons.INVALID_GRANT, "client checksum does not match registration", status=403)
        return client

    # -- registration --------------------------------------------------------

    def register_client(
        self, authorization_grant: str, client_checksum: str, requested_scopes: Optional[set[str]] = None
    ) -> tuple[ClientRecord, Optional[str], bool]:
        """Returns (record, client secret or None on repeat, created)."""
        try:
            checksum = str(Checksum.parse(client_checksum))
        except ValueError as exc:
            raise RegistrationError(reasons.MALFORMED_CHECKSUM, str(exc)) from exc
        grant_scopes = self.config.grants.get(str(authorization_grant))
        if grant_scopes is None:
            raise RegistrationError(reasons.INVALID_GRANT, "unknown authorization grant", status=403)
        scopes = set(grant_scopes) if requested_scopes is None else set(grant_scopes) & set(requested_scopes)
        if not scopes:
            raise RegistrationError(reasons.INVALID_GRANT, "grant confers none of the requested scopes", status=403)
        grant_hash = _hash_secret(authorization_grant)
        with self._lock:
            existing = self.store.find_client(grant_hash, checksum)
            if existing is not None:
                return existing, None, False
            client_id = "client_" + self._token_hex(8)
            secret = self._token_hex(24)
            rec = ClientRecord(client_id, checksum, scopes, _hash_secret(secret), grant_hash)
            self.store.clients[client_id] = rec
            self.store.commit()
            logger.info("registered client %s", client_id)
            return rec, secret, True

    def register_agent(
        self,
        client_id: str,
        authorization_grant: str,
        agent_id: str,
        signature: AgentSignature | Mapping[str, Any],
        pop_public_jwk: Mapping[str, str],
        version: str,
        client_checksum: Optional[str] = None,
    ) -> AgentRecord:
        """The checksum is recomputed here from the submitted components; only the digest is stored."""
        if not agent_id:
            raise RegistrationError(reasons.INVALID_REQUEST, "agent_id is required")
        try:
            sig = signature if isinstance(signature, AgentSignature) else AgentSignature.from_dict(signature)
            checksum = str(agent_checksum(sig))
        except SignatureError as exc:
            raise RegistrationError(reasons.INVALID_SIGNATURE, str(exc)) from exc
        try:
            key = public_key_from_jwk(pop_public_jwk)
            jkt = thumbprint_b64url(key)
        except (UnsupportedKeyError, KeyError, TypeError) as exc:
            raise RegistrationError(reasons.INVALID_KEY, f"malformed PoP key: {exc}") from exc
        with self._lock:
            self._client_for_grant(client_id, authorization_grant, client_checksum)
            for rec in self.store.all_agent_records(client_id):
                if rec.agent_checksum == checksum:
                    raise RegistrationError(
                        reasons.DUPLICATE_CHECKSUM,
                        f"checksum already registered to agent {rec.agent_id!r}",
                        status=409,
                    )
                if rec.agent_id != agent_id and thumbprint_b64url(rec.pop_public_jwk) == jkt:
                    raise RegistrationError(reasons.DUPLICATE_KEY, "PoP key already bound to another agent", status=409)
            now = self._now()
            rec = AgentRecord(
                agent_id=agent_id,
                client_id=client_id,
                agent_checksum=checksum,
                pop_public_jwk=key.public_jwk(),
                registration_id=f"reg_{now}_{self._token_hex(3)}",
                version=str(version),
                created_at=now,
            )
            self.store.add_agent(rec)
            self.store.commit()
            logger.info("registered agent %s/%s as %s", client_id, agent_id, rec.registration_id)
            return rec

    def register_workflow(
        self, client_id: str, authorization_grant: str, definition: WorkflowDefinition | Mapping[str, Any]
    ) -> WorkflowDefinition:
        try:
            defn = definition if isinstance(definition, WorkflowDefinition) else WorkflowDefinition.from_dict(definition)
        except WorkflowError as exc:
            raise RegistrationError(exc.reason, str(exc)) from exc
        with self._lock:
            self._client_for_grant(client_id, authorization_grant, None)
            known = self.store.client_agent_ids(client_id)
            try:
                validate_definition(defn, known)
            except WorkflowError as exc:
                raise RegistrationError(exc.reason, str(exc)) from exc
            previous = self.store.workflow_versions(client_id, defn.workflow_id)
            stored = WorkflowDefinition.from_dict(defn.to_dict())
            stored.client_id = client_id
            stored.version = (previous[-1].version if previous else 0) + 1
            self.store.add_workflow(stored)
            self.store.commit()
            return stored

    def publish_shim_version(self, version: str, checksum: str) -> None:
        try:
            rendered = str(Checksum.parse(checksum))
        except ValueError as exc:
            raise RegistrationError(reasons.MALFORMED_CHECKSUM, str(exc)) from exc
        with self._lock:
            self.store.shim_versions[version] = rendered
            self.store.commit()

    def well_known_shim_versions(self) -> dict[str, str]:
        with self._lock:
            return dict(self.store.shim_versions)

    def jwks(self) -> dict[str, Any]:
        return jwks_document([self.issuer_key])

    def agent_metadata(self, client_id: str, authorization_grant: str, agent_id: str) -> dict[str, Any]:
        """Governance view of an agent: digests and versions only, never prompts or tools."""
        with self._lock:
            self._client_for_grant(client_id, authorization_grant, None)
            versions = self.store.agent_versions(client_id, agent_id)
            if not versions:
                raise RegistrationError(reasons.UNKNOWN_AGENT, f"unknown agent {agent_id!r}", status=404)
            return {
                "agent_id": agent_id,
                "versions": [
                    {
                        "registration_id": r.registration_id,
                        "version": r.version,
                        "agent_checksum": r.agent_checksum,
                        "created_at": r.created_at,
                        "pop_jkt": thumbprint_b64url(r.pop_public_jwk),
                    }
                    for r in versions
                ],
            }

    # -- tokens ----------------------------------------------------------------

    def _authenticate_client(self, client_id: str, secret: Optional[str], token: Optional[str]) -> ClientRecord:
        client = self.store.clients.get(client_id)
        if client is None:
            raise TokenDenied(reasons.UNKNOWN_CLIENT, f"unknown client {client_id!r}")
        if secret is not None:
            if hmac.compare_digest(client.client_secret_hash, _hash_secret(str(secret))):
                return client
            raise TokenDenied(reasons.BAD_CLIENT_CREDENTIAL, "client secret mismatch")
        if token is not None:
            try:
                claims = verify_token(
                    str(token), {self.issuer_key.kid: self.issuer_key.public_key},
                    self.config.issuer, self.config.audience, self._now(),
                )
            except TokenError as exc:
                raise TokenDenied(reasons.BAD_CLIENT_CREDENTIAL, f"client access token rejected: {exc}") from exc
            if claims.sub != client_id or claims.is_intent_token:
                raise TokenDenied(reasons.BAD_CLIENT_CREDENTIAL, "token is not a client-level access token")
            return client
        raise TokenDenied(reasons.BAD_CLIENT_CREDENTIAL, "no client credential presented")

    def issue_access_token(self, client_id: str, client_secret: str, scope: Optional[str] = None) -> str:
        """Plain client-level JWT under the ``client_credentials`` grant."""
        with self._lock:
            client = self._authenticate_client(client_id, client_secret, None)
            scopes = set(client.granted_scopes)
            if scope is not None:
                requested = set(scope.split())
                if not requested <= scopes:
                    raise TokenDenied(reasons.SCOPE_ESCALATION, "requested scope exceeds client grant")
                scopes = requested
            now = self._now()
            claims = TokenClaims(
                iss=self.config.issuer,
                sub=client_id,
                aud=self.config.audience,
                iat=now,
                exp=now + self.config.access_token_ttl,
                jti="token_" + self._token_hex(8),
                scope=" ".join(sorted(scopes)),
            )
            return mint_token(claims, self.issuer_key)

    def _log(self, req: Mapping[str, Any], outcome: str) -> None:
        self.store.log.append(
            {
                "client_id": str(req.get("client_id", "")),
                "agent_id": str(req.get("agent_id", "")),
                "workflow_id": str(req.get("workflow_id", "")),
                "step": str(req.get("workflow_step", "")),
                "outcome": outcome,
            },
            timestamp=self._now(),
        )

    def issue_intent_token(
        self, request: TokenRequest | Mapping[str, Any], shim_header: Optional[str] = None
    ) -> str:
        """Validate an ``agent_checksum`` grant request and mint an intent token.

        Every outcome, issued or denied, appends exactly one workflow event.
        """
        raw = request.to_dict() if isinstance(request, TokenRequest) else dict(request)
        with self._lock:
            try:
                req = request if isinstance(request, TokenRequest) else TokenRequest.from_dict(raw)
                token = self._issue_intent_token(req, shim_header)
            except TokenDenied as exc:
                self._log(raw, f"denied:{exc.reason}")
                self.store.commit()
                logger.info("denied intent token for %s/%s: %s", raw.get("client_id"), raw.get("agent_id"), exc.reason)
                if exc.reason in _DENIAL_STATUS:
                    exc.status = _DENIAL_STATUS[exc.reason]
                raise
            self._log(raw, "issued")
            self.store.commit()
            return token

    def _issue_intent_token(self, req: TokenRequest, shim_header: Optional[str]) -> str:
        client = self._authenticate_client(req.client_id, req.client_secret, req.client_token)

        agent = self.store.active_agent(client.client_id, req.agent_id)
        if agent is None:
            raise TokenDenied(reasons.UNKNOWN_AGENT, f"agent {req.agent_id!r} is not registered")
        if not hmac.compare_digest(agent.agent_checksum, req.runtime_checksum):
            raise TokenDenied(reasons.CHECKSUM_MISMATCH, "runtime checksum differs from registration")

        wf = self.store.active_workflow(client.client_id, req.workflow_id)
        if wf is None:
            raise TokenDenied(reasons.UNKNOWN_WORKFLOW, f"workflow {req.workflow_id!r} is not registered")
        step = wf.step(req.workflow_step)
        if step is None:
            raise TokenDenied(reasons.STEP_NOT_IN_WORKFLOW, f"step {req.workflow_step!r} not in workflow")
        if req.agent_id not in step.allowed_agents:
            raise TokenDenied(reasons.AGENT_NOT_ALLOWED_FOR_STEP, f"{req.agent_id!r} may not execute {step.step_id!r}")
        if not is_legal_transition(wf, req.executed_steps, req.workflow_step):
            raise TokenDenied(reasons.ILLEGAL_STEP_TRANSITION, "executed steps do not lead to the requested step")
        if not chain_is_consistent(
            wf, req.delegation_chain, req.executed_steps, req.agent_id, self.store.client_agent_ids(client.client_id)
        ):
            raise TokenDenied(reasons.CHAIN_HEAD_MISMATCH, "delegation chain inconsistent with workflow")

        known_shims = set(self.store.shim_versions.values())
        presented = [req.shim_checksum] + ([shim_header] if shim_header is not None else [])
        for value in presented:
            try:
                ok = str(Checksum.parse(value)) in known_shims
            except ValueError:
                ok = False
            if not ok:
                raise TokenDenied(reasons.SHIM_CHECKSUM_UNKNOWN, "shim checksum is not a released version")

        allowed = client.granted_scopes & step.required_scopes
        if not step.required_scopes <= client.granted_scopes:
            raise TokenDenied(reasons.SCOPE_ESCALATION, "step requires scopes the client was never granted")
        if req.scope is not None:
            requested = set(req.scope.split())
            if not requested <= allowed:
                raise TokenDenied(reasons.SCOPE_ESCALATION, "requested scope exceeds step scopes")
            allowed = requested

        now = self._now()
        intent = seal_delegation_chain(
            IntentClaims(
                workflow_id=wf.workflow_id,
                workflow_step=step.step_id,
                executed_by=req.agent_id,
                initiated_by=req.delegation_chain[0],
                delegation_chain=list(req.delegation_chain),
                step_sequence_hash=str(compute_step_sequence_hash(req.executed_steps)),
                execution_context=dict(req.execution_context),
            ),
            self.config.chain_key,
        )
        claims = TokenClaims(
            iss=self.config.issuer,
            sub=client.client_id,
            aud=self.config.audience,
            iat=now,
            exp=now + self.config.intent_token_ttl,
            jti="token_" + self._token_hex(16),
            scope=" ".join(sorted(allowed)),
            intent=intent,
            agent_proof=AgentProof(agent.agent_checksum, agent.registration_id, agent.version),
            cnf_jkt=thumbprint_b64url(agent.pop_public_jwk),
        )
        return mint_token(claims, self.issuer_key)

    def verify_intent_provenance(self, claims: TokenClaims) -> bool:
        """Re-check the delegation MAC of an intent this IDP issued."""
        return claims.intent is not None and verify_delegation_chain(claims.intent, self.config.chain_key)

    # -- log -------------------------------------------------------------------

    def verify_log_integrity(self) -> bool:
        return self.store.log.verify()

    def events(self) -> list[dict[str, Any]]:
        return [e.to_dict() for e in self.store.log]
