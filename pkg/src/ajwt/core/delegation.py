"""HMAC sealing of the delegation fields of an intent claim."""

from __future__ import annotations

import dataclasses
import hashlib
import hmac

from ajwt.core.canonical import canonical_json
from ajwt.core.tokens import ClaimsError, IntentClaims

TAG_PREFIX = "hmac-sha256:"


def delegation_mac_input(intent: IntentClaims) -> bytes:
    return canonical_json(
        {
            "delegation_chain": list(intent.delegation_chain),
            "step_sequence_hash": intent.step_sequence_hash,
            "workflow_id": intent.workflow_id,
        }
    )


def _tag(intent: IntentClaims, chain_key: bytes) -> str:
    mac = hmac.new(chain_key, delegation_mac_input(intent), hashlib.sha256).hexdigest()
    return TAG_PREFIX + mac


def seal_delegation_chain(intent: IntentClaims, chain_key: bytes) -> IntentClaims:
    intent.validate()
    return dataclasses.replace(intent, chain_tag=_tag(intent, chain_key))


def verify_delegation_chain(intent: IntentClaims, chain_key: bytes) -> bool:
    if not intent.chain_tag:
        return False
    try:
        intent.validate()
    except ClaimsError:
        return False
    return hmac.compare_digest(intent.chain_tag, _tag(intent, chain_key))
