"""Identity provider: registration, intent-token minting and the workflow event log."""

from ajwt.idp.service import (
    AGENT_CHECKSUM_GRANT,
    CLIENT_CREDENTIALS_GRANT,
    IdentityProvider,
    IdpConfig,
    IdpError,
    RegistrationError,
    TokenDenied,
    TokenRequest,
)
from ajwt.idp.store import AgentRecord, ClientRecord, FileStore, MemoryStore, RegistrationStore
from ajwt.idp.workflow import StepDef, WorkflowDefinition, WorkflowError

__all__ = [
    "AGENT_CHECKSUM_GRANT",
    "CLIENT_CREDENTIALS_GRANT",
    "AgentRecord",
    "ClientRecord",
    "FileStore",
    "IdentityProvider",
    "IdpConfig",
    "IdpError",
    "MemoryStore",
    "RegistrationError",
    "RegistrationStore",
    "StepDef",
    "TokenDenied",
    "TokenRequest",
    "WorkflowDefinition",
    "WorkflowError",
]
