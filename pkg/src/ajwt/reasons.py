"""Machine-readable denial and refusal codes used across IDP, shim and resource server."""

# issue_intent_token denials
UNKNOWN_CLIENT = "unknown_client"
BAD_CLIENT_CREDENTIAL = "bad_client_credential"
UNKNOWN_AGENT = "unknown_agent"
CHECKSUM_MISMATCH = "checksum_mismatch"
UNKNOWN_WORKFLOW = "unknown_workflow"
STEP_NOT_IN_WORKFLOW = "step_not_in_workflow"
AGENT_NOT_ALLOWED_FOR_STEP = "agent_not_allowed_for_step"
ILLEGAL_STEP_TRANSITION = "illegal_step_transition"
CHAIN_HEAD_MISMATCH = "chain_head_mismatch"
SHIM_CHECKSUM_UNKNOWN = "shim_checksum_unknown"
SCOPE_ESCALATION = "scope_escalation"
INVALID_REQUEST = "invalid_request"
UNSUPPORTED_GRANT_TYPE = "unsupported_grant_type"

IDP_TOKEN_DENIALS = (
    UNKNOWN_CLIENT,
    BAD_CLIENT_CREDENTIAL,
    UNKNOWN_AGENT,
    CHECKSUM_MISMATCH,
    UNKNOWN_WORKFLOW,
    STEP_NOT_IN_WORKFLOW,
    AGENT_NOT_ALLOWED_FOR_STEP,
    ILLEGAL_STEP_TRANSITION,
    CHAIN_HEAD_MISMATCH,
    SHIM_CHECKSUM_UNKNOWN,
    SCOPE_ESCALATION,
    INVALID_REQUEST,
    UNSUPPORTED_GRANT_TYPE,
)

# registration errors
INVALID_GRANT = "invalid_grant"
MALFORMED_CHECKSUM = "malformed_checksum"
DUPLICATE_CHECKSUM = "duplicate_checksum"
DUPLICATE_KEY = "duplicate_key"
INVALID_KEY = "invalid_key"
INVALID_SIGNATURE = "invalid_agent_signature"
INVALID_WORKFLOW = "invalid_workflow"
CYCLE_DETECTED = "cycle_detected"
UNKNOWN_STEP = "unknown_step"

REGISTRATION_ERRORS = (
    INVALID_GRANT,
    MALFORMED_CHECKSUM,
    UNKNOWN_CLIENT,
    DUPLICATE_CHECKSUM,
    DUPLICATE_KEY,
    INVALID_KEY,
    INVALID_SIGNATURE,
    INVALID_WORKFLOW,
    CYCLE_DETECTED,
    UNKNOWN_AGENT,
    UNKNOWN_STEP,
    INVALID_REQUEST,
)

# resource-server denials, in evaluation order
MALFORMED_TOKEN = "malformed_token"
BAD_SIGNATURE = "bad_signature"
EXPIRED = "expired"
WRONG_AUDIENCE = "wrong_audience"
SCOPE_INSUFFICIENT = "scope_insufficient"
INTENT_MISSING = "intent_missing"
STEP_NOT_ALLOWED_FOR_ENDPOINT = "step_not_allowed_for_endpoint"
POP_THUMBPRINT_MISMATCH = "pop_thumbprint_mismatch"
POP_SIGNATURE_INVALID = "pop_signature_invalid"
POP_STALE = "pop_stale"
JTI_REPLAYED = "jti_replayed"
SHIM_CHECKSUM_INVALID = "shim_checksum_invalid"

RS_DENIALS = (
    MALFORMED_TOKEN,
    BAD_SIGNATURE,
    EXPIRED,
    WRONG_AUDIENCE,
    SCOPE_INSUFFICIENT,
    INTENT_MISSING,
    STEP_NOT_ALLOWED_FOR_ENDPOINT,
    POP_THUMBPRINT_MISMATCH,
    POP_SIGNATURE_INVALID,
    POP_STALE,
    JTI_REPLAYED,
    SHIM_CHECKSUM_INVALID,
)

# refusals raised inside the client shim before anything leaves the process
NO_WORKFLOW_STEP = "no_workflow_step"
UNKNOWN_ANCHOR = "unknown_anchor"
ANCHOR_AGENT_MISMATCH = "anchor_agent_mismatch"
EXECUTOR_MISMATCH = "executor_mismatch"
PROMPT_TEMPLATE_VIOLATION = "prompt_template_violation"
SHIM_NOT_RELEASED = "shim_not_released"
AGENT_CHECKSUM_DRIFT = "agent_checksum_drift"

SHIM_REFUSALS = (
    NO_WORKFLOW_STEP,
    UNKNOWN_ANCHOR,
    ANCHOR_AGENT_MISMATCH,
    EXECUTOR_MISMATCH,
    PROMPT_TEMPLATE_VIOLATION,
    SHIM_NOT_RELEASED,
    AGENT_CHECKSUM_DRIFT,
)

# outcome of a disclosure probe that found nothing to leak
NO_PLAINTEXT_DISCLOSED = "no_plaintext_disclosed"

ALL_CODES = frozenset(
    IDP_TOKEN_DENIALS + REGISTRATION_ERRORS + RS_DENIALS + SHIM_REFUSALS + (NO_PLAINTEXT_DISCLOSED,)
)
