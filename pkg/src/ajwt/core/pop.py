"""Per-agent Ed25519 proof-of-possession keys and HTTP request signatures.

The signature headers follow the HTTP Message Signatures layout
(``Signature-Input`` / ``Signature``) with a fixed set of covered
components: ``@method``, ``@request-target``, ``authorization``,
``content-digest`` plus the ``created`` and ``keyid`` parameters.
"""

from __future__ import annotations

import base64
import hashlib
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Mapping, Optional

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey

from ajwt.core.canonical import Checksum, b64url_decode, b64url_encode, canonical_json

KEY_TYPE = "OKP/Ed25519"
SIGNATURE_LABEL = "sig1"
COVERED_COMPONENTS = ("@method", "@request-target", "authorization", "content-digest")
DEFAULT_MAX_SKEW = 60


class PopError(ValueError):
    pass


class UnsupportedKeyError(PopError):
    pass


class MissingCoveredHeaderError(PopError):
    pass


class MalformedSignatureError(PopError):
    pass


class StaleSignatureError(PopError):
    pass


@dataclass
class PopKeyPair:
    kid: str
    public: bytes
    private: Optional[Ed25519PrivateKey] = None
    key_type: str = KEY_TYPE

    def __repr__(self) -> str:
        return f"PopKeyPair(kid={self.kid!r}, key_type={self.key_type!r})"

    def public_jwk(self) -> dict[str, str]:
        return {"kty": "OKP", "crv": "Ed25519", "x": b64url_encode(self.public), "kid": self.kid}

    def public_key(self) -> Ed25519PublicKey:
        return Ed25519PublicKey.from_public_bytes(self.public)

    def private_bytes(self) -> bytes:
        if self.private is None:
            raise PopError("private half not available")
        return self.private.private_bytes(
            serialization.Encoding.Raw, serialization.PrivateFormat.Raw, serialization.NoEncryption()
        )


def make_kid(agent_id: str, when: float) -> str:
    stamp = datetime.fromtimestamp(when, tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.%fZ")
    return f"agent:{agent_id}#{stamp}"


def generate_pop_keypair(agent_id: str, when: float, seed: Optional[bytes] = None) -> PopKeyPair:
    """New Ed25519 key; ``seed`` (32 bytes) makes it reproducible for tests and harness runs."""
    private = Ed25519PrivateKey.from_private_bytes(seed) if seed is not None else Ed25519PrivateKey.generate()
    public = private.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
    return PopKeyPair(kid=make_kid(agent_id, when), public=public, private=private)


def keypair_from_private_bytes(kid: str, raw: bytes) -> PopKeyPair:
    private = Ed25519PrivateKey.from_private_bytes(raw)
    public = private.public_key().public_bytes(serialization.Encoding.Raw, serialization.PublicFormat.Raw)
    return PopKeyPair(kid=kid, public=public, private=private)


def public_key_from_jwk(jwk: Mapping[str, str]) -> PopKeyPair:
    if jwk.get("kty") != "OKP" or jwk.get("crv") != "Ed25519":
        raise UnsupportedKeyError("only OKP/Ed25519 PoP keys are supported")
    try:
        public = b64url_decode(jwk["x"])
    except (KeyError, ValueError) as exc:
        raise UnsupportedKeyError(f"bad public key encoding: {exc}") from exc
    if len(public) != 32:
        raise UnsupportedKeyError("Ed25519 public key must be 32 bytes")
    return PopKeyPair(kid=str(jwk.get("kid", "")), public=public)


def jwk_thumbprint(key: PopKeyPair | Mapping[str, str]) -> Checksum:
    """SHA-256 over the required JWK members (crv, kty, x) in canonical form."""
    if isinstance(key, PopKeyPair):
        if key.key_type != KEY_TYPE:
            raise UnsupportedKeyError(f"unsupported key type {key.key_type!r}")
        jwk: Mapping[str, str] = key.public_jwk()
    else:
        jwk = key
        if jwk.get("kty") != "OKP" or jwk.get("crv") != "Ed25519":
            raise UnsupportedKeyError("only OKP/Ed25519 PoP keys are supported")
    required = {"crv": jwk["crv"], "kty": jwk["kty"], "x": jwk["x"]}
    return Checksum(hashlib.sha256(canonical_json(required)).digest())


def thumbprint_b64url(key: PopKeyPair | Mapping[str, str]) -> str:
    """Wire form used in the ``cnf.jkt`` claim."""
    return b64url_encode(jwk_thumbprint(key).digest)


def content_digest(body: bytes) -> str:
    return "sha-256=:" + base64.b64encode(hashlib.sha256(body).digest()).decode("ascii") + ":"


_COMPONENT_LIST = "(" + " ".join(f'"{c}"' for c in COVERED_COMPONENTS) + ")"


def _params(created: int, kid: str) -> str:
    return f'{_COMPONENT_LIST};created={created};keyid="{kid}";alg="ed25519"'


def signature_base(
    method: str, target: str, authorization: str, body_digest: str, params: str
) -> bytes:
    values = {
        "@method": method.upper(),
        "@request-target": target,
        "authorization": authorization,
        "content-digest": body_digest,
    }
    lines = [f'"{c}": {values[c]}' for c in COVERED_COMPONENTS]
    lines.append(f'"@signature-params": {params}')
    return "\n".join(lines).encode("utf-8")


def _covered_header(headers: Mapping[str, str], name: str) -> str:
    for key, value in headers.items():
        if key.lower() == name:
            return value
    raise MissingCoveredHeaderError(f"covered header {name!r} is missing")


def sign_http_request(
    method: str,
    target: str,
    headers: Mapping[str, str],
    body_digest: str,
    key: PopKeyPair,
    created: int,
) -> tuple[str, str]:
    """Return ``(Signature-Input, Signature)`` header values."""
    if key.private is None:
        raise PopError("private half not available")
    authorization = _covered_header(headers, "authorization")
    params = _params(created, key.kid)
    sig = key.private.sign(signature_base(method, target, authorization, body_digest, params))
    signature_input = f"{SIGNATURE_LABEL}={params}"
    signature = f"{SIGNATURE_LABEL}=:{base64.b64encode(sig).decode('ascii')}:"
    return signature_input, signature


_INPUT_RE = re.compile(
    r'^sig1=(\((?:"[^"]+"\s?)*\);created=(-?\d+);keyid="([^"]*)";alg="ed25519")$'
)
_SIG_RE = re.compile(r"^sig1=:([A-Za-z0-9+/=]+):$")


def parse_signature_headers(signature_input: str, signature: str) -> tuple[str, int, str, bytes]:
    """Return (params, created, keyid, raw signature)."""
    m = _INPUT_RE.match(signature_input or "")
    s = _SIG_RE.match(signature or "")
    if m is None or s is None:
        raise MalformedSignatureError("unparseable Signature-Input or Signature header")
    params = m.group(1)
    if not params.startswith(_COMPONENT_LIST + ";"):
        raise MalformedSignatureError("covered components differ from the required set")
    try:
        raw = base64.b64decode(s.group(1), validate=True)
    except ValueError as exc:
        raise MalformedSignatureError("signature is not base64") from exc
    return params, int(m.group(2)), m.group(3), raw


def verify_http_signature(
    method: str,
    target: str,
    headers: Mapping[str, str],
    body_digest: str,
    signature_input: str,
    signature: str,
    public_key: PopKeyPair,
    now: int,
    max_skew: int = DEFAULT_MAX_SKEW,
) -> bool:
    """True iff the signature verifies under ``public_key``.

    Raises :class:`MalformedSignatureError` for unparseable headers and
    :class:`StaleSignatureError` when ``created`` is outside ``now ± max_skew``.
    """
    params, created, _kid, raw = parse_signature_headers(signature_input, signature)
    try:
        authorization = _covered_header(headers, "authorization")
    except MissingCoveredHeaderError as exc:
        raise MalformedSignatureError(str(exc)) from exc
    try:
        public_key.public_key().verify(raw, signature_base(method, target, authorization, body_digest, params))
    except InvalidSignature:
        return False
    if abs(now - created) > max_skew:
        raise StaleSignatureError(f"signature created {now - created}s away from now")
    return True
