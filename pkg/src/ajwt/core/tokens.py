"""Claim types plus minting and verification of compact RS256 JWS tokens.

Intent tokens are ordinary three-part JWTs; the ``intent``, ``agent_proof``
and ``cnf`` claims ride alongside the registered claims so that verifiers
unaware of them still accept the token.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import padding, rsa

from ajwt.core.canonical import b64url_decode, b64url_encode, canonical_json

SUPPORTED_ALGORITHMS = ("RS256",)


class TokenError(Exception):
    reason = "malformed"


class MalformedTokenError(TokenError):
    reason = "malformed"


class InvalidSignatureError(TokenError):
    reason = "bad_signature"


class ExpiredTokenError(TokenError):
    reason = "expired"


class WrongAudienceError(TokenError):
    reason = "wrong_audience"


class WrongIssuerError(TokenError):
    reason = "wrong_issuer"


class ClaimsError(ValueError):
    """Claims violate their invariants; raised before anything is signed."""


@dataclass
class IntentClaims:
    workflow_id: str
    workflow_step: str
    executed_by: str
    initiated_by: str
    delegation_chain: list[str]
    step_sequence_hash: str
    execution_context: dict[str, str] = field(default_factory=dict)
    chain_tag: Optional[str] = None

    def validate(self) -> None:
        chain = self.delegation_chain
        if not chain:
            raise ClaimsError("delegation_chain must be non-empty")
        if chain[0] != self.initiated_by:
            raise ClaimsError("delegation_chain must start with initiated_by")
        if chain[-1] != self.executed_by:
            raise ClaimsError("delegation_chain must end with executed_by")
        for key, value in self.execution_context.items():
            if not isinstance(key, str) or not isinstance(value, str):
                raise ClaimsError("execution_context must map strings to strings")

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "workflow_id": self.workflow_id,
            "workflow_step": self.workflow_step,
            "executed_by": self.executed_by,
            "initiated_by": self.initiated_by,
            "delegation_chain": list(self.delegation_chain),
            "step_sequence_hash": self.step_sequence_hash,
            "execution_context": dict(self.execution_context),
        }
        if self.chain_tag is not None:
            out["chain_tag"] = self.chain_tag
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "IntentClaims":
        return cls(
            workflow_id=data["workflow_id"],
            workflow_step=data["workflow_step"],
            executed_by=data["executed_by"],
            initiated_by=data["initiated_by"],
            delegation_chain=list(data["delegation_chain"]),
            step_sequence_hash=data["step_sequence_hash"],
            execution_context=dict(data.get("execution_context", {})),
            chain_tag=data.get("chain_tag"),
        )


@dataclass
class AgentProof:
    agent_checksum: str
    registration_id: str
    version: str

    def validate(self) -> None:
        if not str(self.agent_checksum).startswith("sha256:"):
            raise ClaimsError("agent_checksum must be a sha256 checksum")

    def to_dict(self) -> dict[str, str]:
        return {
            "agent_checksum": self.agent_checksum,
            "registration_id": self.registration_id,
            "version": self.version,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "AgentProof":
        return cls(data["agent_checksum"], data["registration_id"], data["version"])


@dataclass
class TokenClaims:
    iss: str
    sub: str
    aud: str
    exp: int
    iat: int
    jti: str
    scope: str = ""
    intent: Optional[IntentClaims] = None
    agent_proof: Optional[AgentProof] = None
    cnf_jkt: Optional[str] = None

    @property
    def scopes(self) -> set[str]:
        return set(self.scope.split())

    @property
    def is_intent_token(self) -> bool:
        return self.intent is not None

    def validate(self) -> None:
        for name in ("iss", "sub", "aud", "jti"):
            if not isinstance(getattr(self, name), str) or not getattr(self, name):
                raise ClaimsError(f"{name} must be a non-empty string")
        if not isinstance(self.iat, int) or not isinstance(self.exp, int):
            raise ClaimsError("iat and exp must be integer unix seconds")
        if self.iat > self.exp:
            raise ClaimsError("iat must not be after exp")
        if self.intent is not None:
            self.intent.validate()
        if self.agent_proof is not None:
            self.agent_proof.validate()

    def to_payload(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "iss": self.iss,
            "sub": self.sub,
            "aud": self.aud,
            "exp": self.exp,
            "iat": self.iat,
            "jti": self.jti,
            "scope": self.scope,
        }
        if self.intent is not None:
            payload["intent"] = self.intent.to_dict()
        if self.agent_proof is not None:
            payload["agent_proof"] = self.agent_proof.to_dict()
        if self.cnf_jkt is not None:
            payload["cnf"] = {"jkt": self.cnf_jkt}
        return payload

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "TokenClaims":
        aud = payload["aud"]
        if isinstance(aud, list):
            if len(aud) != 1:
                raise MalformedTokenError("multi-valued aud is not supported")
            aud = aud[0]
        cnf = payload.get("cnf")
        return cls(
            iss=payload["iss"],
            sub=payload["sub"],
            aud=aud,
            exp=payload["exp"],
            iat=payload["iat"],
            jti=payload["jti"],
            scope=payload.get("scope", ""),
            intent=IntentClaims.from_dict(payload["intent"]) if "intent" in payload else None,
            agent_proof=AgentProof.from_dict(payload["agent_proof"]) if "agent_proof" in payload else None,
            cnf_jkt=cnf.get("jkt") if isinstance(cnf, Mapping) else None,
        )


@dataclass
class IssuerKey:
    """RSA signing key of the authorization server."""

    kid: str
    private_key: rsa.RSAPrivateKey

    @property
    def public_key(self) -> rsa.RSAPublicKey:
        return self.private_key.public_key()

    def public_jwk(self) -> dict[str, str]:
        numbers = self.public_key.public_numbers()
        return {
            "kty": "RSA",
            "kid": self.kid,
            "use": "sig",
            "alg": "RS256",
            "n": b64url_encode(_int_bytes(numbers.n)),
            "e": b64url_encode(_int_bytes(numbers.e)),
        }


def _int_bytes(value: int) -> bytes:
    return value.to_bytes((value.bit_length() + 7) // 8, "big")


def generate_issuer_key(kid: str = "idp_key_2024", key_size: int = 2048) -> IssuerKey:
    return IssuerKey(kid, rsa.generate_private_key(public_exponent=65537, key_size=key_size))


def jwks_document(keys: list[IssuerKey]) -> dict[str, Any]:
    return {"keys": [k.public_jwk() for k in keys]}


def keys_from_jwks(jwks: Mapping[str, Any]) -> dict[str, rsa.RSAPublicKey]:
    """Map kid -> RSA public key for every RS256-capable entry of a JWKS."""
    out: dict[str, rsa.RSAPublicKey] = {}
    for jwk in jwks.get("keys", []):
        if jwk.get("kty") != "RSA":
            continue
        n = int.from_bytes(b64url_decode(jwk["n"]), "big")
        e = int.from_bytes(b64url_decode(jwk["e"]), "big")
        out[jwk["kid"]] = rsa.RSAPublicNumbers(e, n).public_key()
    return out


def mint_token(claims: TokenClaims, issuer_key: IssuerKey, alg: str = "RS256") -> str:
    if alg not in SUPPORTED_ALGORITHMS:
        raise ClaimsError(f"unsupported algorithm {alg!r}")
    claims.validate()
    header = {"alg": alg, "typ": "JWT", "kid": issuer_key.kid}
    signing_input = (
        b64url_encode(canonical_json(header)) + "." + b64url_encode(canonical_json(claims.to_payload()))
    )
    signature = issuer_key.private_key.sign(
        signing_input.encode("ascii"), padding.PKCS1v15(), hashes.SHA256()
    )
    return signing_input + "." + b64url_encode(signature)


def decode_unverified(token: str) -> tuple[dict[str, Any], dict[str, Any]]:
    """Split and JSON-decode header and payload without checking anything."""
    if not isinstance(token, str):
        raise MalformedTokenError("token must be text")
    parts = token.split(".")
    if len(parts) != 3:
        raise MalformedTokenError("token must have three dot-separated parts")
    try:
        header = json.loads(b64url_decode(parts[0]))
        payload = json.loads(b64url_decode(parts[1]))
    except ValueError as exc:
        raise MalformedTokenError(f"undecodable token segment: {exc}") from exc
    if not isinstance(header, dict) or not isinstance(payload, dict):
        raise MalformedTokenError("token segments must be JSON objects")
    return header, payload


def verify_token(
    token: str,
    trusted_keys: Mapping[str, rsa.RSAPublicKey],
    expected_iss: str,
    expected_aud: str,
    now: int,
) -> TokenClaims:
    header, payload = decode_unverified(token)
    alg = header.get("alg")
    if alg not in SUPPORTED_ALGORITHMS:
        raise InvalidSignatureError(f"unsupported or missing alg {alg!r}")
    key = trusted_keys.get(header.get("kid"))
    if key is None:
        raise InvalidSignatureError(f"no trusted key for kid {header.get('kid')!r}")
    signing_input, _, sig_text = token.rpartition(".")
    try:
        signature = b64url_decode(sig_text)
        key.verify(signature, signing_input.encode("ascii"), padding.PKCS1v15(), hashes.SHA256())
    except (InvalidSignature, ValueError) as exc:
        raise InvalidSignatureError("signature verification failed") from exc
    try:
        claims = TokenClaims.from_payload(payload)
        claims.validate()
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise MalformedTokenError(f"missing or malformed claim: {exc}") from exc
    if claims.iss != expected_iss:
        raise WrongIssuerError(f"unexpected issuer {claims.iss!r}")
    if claims.aud != expected_aud:
        raise WrongAudienceError(f"unexpected audience {claims.aud!r}")
    if not isinstance(claims.exp, int) or not isinstance(claims.iat, int):
        raise MalformedTokenError("exp and iat must be integers")
    if now >= claims.exp:
        raise ExpiredTokenError("token expired")
    if claims.iat > now:
        raise ExpiredTokenError("token not yet valid")
    return claims
