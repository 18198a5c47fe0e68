"""Expected denial codes per threat in the after phase, one entry per attack attempt."""

from ajwt import reasons as r

AFTER_CODES = {
    "T1": [r.UNKNOWN_ANCHOR, r.BAD_CLIENT_CREDENTIAL],
    "T2": [r.JTI_REPLAYED, r.POP_THUMBPRINT_MISMATCH, r.POP_SIGNATURE_INVALID, r.POP_SIGNATURE_INVALID],
    "T3": [r.SHIM_NOT_RELEASED, r.SHIM_CHECKSUM_UNKNOWN, r.SHIM_CHECKSUM_INVALID],
    "T4": [r.CHECKSUM_MISMATCH, r.CHECKSUM_MISMATCH],
    "T5": [r.AGENT_NOT_ALLOWED_FOR_STEP, r.PROMPT_TEMPLATE_VIOLATION],
    "T6": [r.INVALID_GRANT, r.INVALID_GRANT],
    "T7": [r.AGENT_NOT_ALLOWED_FOR_STEP, r.ILLEGAL_STEP_TRANSITION],
    "T8": [r.ILLEGAL_STEP_TRANSITION, r.STEP_NOT_ALLOWED_FOR_ENDPOINT],
    "T9": [r.SCOPE_ESCALATION, r.SCOPE_INSUFFICIENT],
    "T10": [r.BAD_SIGNATURE, r.BAD_SIGNATURE],
    "T11": [r.CHAIN_HEAD_MISMATCH, r.CHAIN_HEAD_MISMATCH, r.BAD_SIGNATURE],
    "T12": [r.NO_PLAINTEXT_DISCLOSED, r.INVALID_GRANT],
}
