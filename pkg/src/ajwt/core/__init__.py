"""Pure token and identity primitives: checksums, claims, JWS, delegation MACs, PoP."""

from ajwt.core.agent import (
    AgentSignature,
    PromptIntegrityError,
    SignatureError,
    ToolDescriptor,
    agent_checksum,
    canonicalize_agent_signature,
    render_prompt,
    validate_prompt,
)
from ajwt.core.canonical import (
    Checksum,
    canonical_json,
    compute_checksum,
    compute_step_sequence_hash,
)
from ajwt.core.delegation import seal_delegation_chain, verify_delegation_chain
from ajwt.core.pop import (
    PopKeyPair,
    content_digest,
    generate_pop_keypair,
    jwk_thumbprint,
    sign_http_request,
    thumbprint_b64url,
    verify_http_signature,
)
from ajwt.core.tokens import (
    AgentProof,
    IntentClaims,
    IssuerKey,
    TokenClaims,
    TokenError,
    generate_issuer_key,
    mint_token,
    verify_token,
)

__all__ = [
    "AgentProof",
    "AgentSignature",
    "Checksum",
    "IntentClaims",
    "IssuerKey",
    "PopKeyPair",
    "PromptIntegrityError",
    "SignatureError",
    "TokenClaims",
    "TokenError",
    "ToolDescriptor",
    "agent_checksum",
    "canonical_json",
    "canonicalize_agent_signature",
    "compute_checksum",
    "compute_step_sequence_hash",
    "content_digest",
    "generate_issuer_key",
    "generate_pop_keypair",
    "jwk_thumbprint",
    "mint_token",
    "render_prompt",
    "seal_delegation_chain",
    "sign_http_request",
    "thumbprint_b64url",
    "validate_prompt",
    "verify_delegation_chain",
    "verify_http_signature",
    "verify_token",
]
