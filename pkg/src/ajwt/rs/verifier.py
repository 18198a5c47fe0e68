"""Policy Enforcement Point core: one pure decision per request, no I/O."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Mapping, Optional

from cryptography.hazmat.primitives.asymmetric import rsa

from ajwt import reasons
from ajwt.core.canonical import Checksum, b64url_decode
from ajwt.core.pop import (
    DEFAULT_MAX_SKEW,
    PopError,
    StaleSignatureError,
    content_digest,
    parse_signature_headers,
    public_key_from_jwk,
    thumbprint_b64url,
    verify_http_signature,
)
from ajwt.core.tokens import (
    ExpiredTokenError,
    InvalidSignatureError,
    MalformedTokenError,
    TokenClaims,
    WrongAudienceError,
    WrongIssuerError,
    verify_token,
)
from ajwt.rs.policy import EndpointPolicy
from ajwt.rs.replay import ReplayCache

SHIM_HEADER = "x-shim-checksum"
SIGNATURE_KEY_HEADER = "signature-key"

# denials where the caller failed to authenticate, as opposed to being authenticated but not permitted
UNAUTHENTICATED = frozenset(
    {
        reasons.MALFORMED_TOKEN,
        reasons.BAD_SIGNATURE,
        reasons.EXPIRED,
        reasons.WRONG_AUDIENCE,
        reasons.POP_THUMBPRINT_MISMATCH,
        reasons.POP_SIGNATURE_INVALID,
        reasons.POP_STALE,
        reasons.JTI_REPLAYED,
    }
)


@dataclass(frozen=True)
class RequestView:
    """The parts of an HTTP request the verifier looks at. Header names are lower-cased."""

    method: str
    target: str
    headers: Mapping[str, str]
    body: bytes = b""

    @classmethod
    def build(cls, method: str, target: str, headers: Mapping[str, str], body: bytes = b"") -> "RequestView":
        return cls(method.upper(), target, {k.lower(): v for k, v in headers.items()}, body)

    @property
    def path(self) -> str:
        return self.target.split("?", 1)[0]


@dataclass(frozen=True)
class Decision:
    allow: bool
    reason: Optional[str] = None
    claims: Optional[TokenClaims] = None
    detail: str = ""

    @property
    def status(self) -> int:
        if self.allow:
            return 200
        return 401 if self.reason in UNAUTHENTICATED else 403


@dataclass
class VerifierConfig:
    issuer: str
    audience: str
    max_skew: int = DEFAULT_MAX_SKEW
    # off for the legacy phase: bearer tokens only, no intent, PoP, replay or shim checks
    enforce_intent: bool = True


def _deny(reason: str, detail: str = "") -> Decision:
    return Decision(False, reason, None, detail)


def _bearer(headers: Mapping[str, str]) -> Optional[str]:
    value = headers.get("authorization", "")
    scheme, _, token = value.partition(" ")
    if scheme.lower() != "bearer" or not token.strip():
        return None
    return token.strip()


class _Stage:
    """Tracks which check is running so an unexpected error can be attributed to it."""

    def __init__(self) -> None:
        self.code = reasons.MALFORMED_TOKEN


def verify_request(
    request: RequestView,
    policy: EndpointPolicy,
    issuer_keys: Mapping[str, rsa.RSAPublicKey],
    shim_versions: Mapping[str, str],
    now: int,
    config: VerifierConfig,
    replay_cache: Optional[ReplayCache] = None,
) -> Decision:
    """Decide one request. Any unexpected error denies with the code of the check that raised it."""
    stage = _Stage()
    try:
        return _run(request, policy, issuer_keys, shim_versions, now, config, replay_cache, stage)
    except Exception as exc:  # fail closed
        return _deny(stage.code, f"verification error: {type(exc).__name__}")


def _run(
    request: RequestView,
    policy: EndpointPolicy,
    issuer_keys: Mapping[str, rsa.RSAPublicKey],
    shim_versions: Mapping[str, str],
    now: int,
    config: VerifierConfig,
    replay_cache: Optional[ReplayCache],
    stage: _Stage,
) -> Decision:
    headers = request.headers
    token = _bearer(headers)
    if token is None:
        return _deny(reasons.MALFORMED_TOKEN, "missing or non-bearer Authorization header")
    try:
        claims = verify_token(token, issuer_keys, config.issuer, config.audience, now)
    except MalformedTokenError as exc:
        return _deny(reasons.MALFORMED_TOKEN, str(exc))
    except (InvalidSignatureError, WrongIssuerError) as exc:
        return _deny(reasons.BAD_SIGNATURE, str(exc))
    except ExpiredTokenError as exc:
        return _deny(reasons.EXPIRED, str(exc))
    except WrongAudienceError as exc:
        return _deny(reasons.WRONG_AUDIENCE, str(exc))

    stage.code = reasons.SCOPE_INSUFFICIENT
    if not policy.required_scopes <= claims.scopes:
        missing = sorted(policy.required_scopes - claims.scopes)
        return _deny(reasons.SCOPE_INSUFFICIENT, f"missing scope(s) {missing}")

    if not config.enforce_intent:
        return Decision(True, None, claims)

    stage.code = reasons.INTENT_MISSING
    if policy.require_intent and not claims.is_intent_token:
        return _deny(reasons.INTENT_MISSING, "route requires an intent token")

    stage.code = reasons.STEP_NOT_ALLOWED_FOR_ENDPOINT
    if claims.intent is not None and not policy.step_allowed(claims.intent.workflow_id, claims.intent.workflow_step):
        return _deny(
            reasons.STEP_NOT_ALLOWED_FOR_ENDPOINT,
            f"step {claims.intent.workflow_step!r} of {claims.intent.workflow_id!r} is not mapped to this endpoint",
        )

    pop_bound = claims.cnf_jkt is not None or claims.is_intent_token
    signature_key: Any = None
    if pop_bound:
        stage.code = reasons.POP_THUMBPRINT_MISMATCH
        raw_key = headers.get(SIGNATURE_KEY_HEADER)
        if raw_key is None or claims.cnf_jkt is None:
            return _deny(reasons.POP_THUMBPRINT_MISMATCH, "no confirmation key to match")
        try:
            pop_key = public_key_from_jwk(json.loads(b64url_decode(raw_key)))
        except (ValueError, KeyError, TypeError, PopError) as exc:
            return _deny(reasons.POP_THUMBPRINT_MISMATCH, f"unusable Signature-Key: {exc}")
        if thumbprint_b64url(pop_key) != claims.cnf_jkt:
            return _deny(reasons.POP_THUMBPRINT_MISMATCH, "presented key does not match cnf.jkt")

        stage.code = reasons.POP_SIGNATURE_INVALID
        digest = content_digest(request.body)
        if headers.get("content-digest") != digest:
            return _deny(reasons.POP_SIGNATURE_INVALID, "Content-Digest does not match the body")
        sig_input = headers.get("signature-input", "")
        sig_value = headers.get("signature", "")
        try:
            ok = verify_http_signature(
                request.method, request.target, headers, digest, sig_input, sig_value, pop_key, now, config.max_skew
            )
        except StaleSignatureError as exc:
            return _deny(reasons.POP_STALE, str(exc))
        except PopError as exc:
            return _deny(reasons.POP_SIGNATURE_INVALID, str(exc))
        if not ok:
            return _deny(reasons.POP_SIGNATURE_INVALID, "request signature does not verify")
        _, created, _, raw_sig = parse_signature_headers(sig_input, sig_value)
        signature_key = (claims.cnf_jkt, created, raw_sig)

        stage.code = reasons.JTI_REPLAYED
        if replay_cache is not None and replay_cache.seen(claims.jti, signature_key, now):
            return _deny(reasons.JTI_REPLAYED, f"jti {claims.jti!r} already used")

    stage.code = reasons.SHIM_CHECKSUM_INVALID
    shim = headers.get(SHIM_HEADER)
    if shim is not None or claims.is_intent_token:
        try:
            released = shim is not None and str(Checksum.parse(shim)) in set(shim_versions.values())
        except ValueError:
            released = False
        if not released:
            return _deny(reasons.SHIM_CHECKSUM_INVALID, "shim checksum is not a released version")

    if pop_bound and replay_cache is not None:
        stage.code = reasons.JTI_REPLAYED
        created = signature_key[1]
        if not replay_cache.claim(claims.jti, claims.exp, signature_key, created + config.max_skew + 1, now):
            return _deny(reasons.JTI_REPLAYED, f"jti {claims.jti!r} already used")
    return Decision(True, None, claims)
