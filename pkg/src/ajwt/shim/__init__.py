"""Client-side enforcement layer embedded in the agent application."""

from ajwt.shim.bridge import BridgeError, BridgeIdentifier, BridgeRegistry
from ajwt.shim.client import (
    SHIM_VERSION,
    AgentContext,
    ResourceDenied,
    Shim,
    ShimRefusal,
    TokenDenied,
    VerificationReport,
    shim_self_checksum,
    startup_verify,
)
from ajwt.shim.config import ShimConfig
from ajwt.shim.legacy import LegacyClient
from ajwt.shim.tracker import WorkflowTracker, track_step
from ajwt.shim.transport import RoutingTransport, in_process_client

__all__ = [
    "SHIM_VERSION",
    "AgentContext",
    "BridgeError",
    "BridgeIdentifier",
    "BridgeRegistry",
    "LegacyClient",
    "ResourceDenied",
    "RoutingTransport",
    "Shim",
    "ShimConfig",
    "ShimRefusal",
    "TokenDenied",
    "VerificationReport",
    "WorkflowTracker",
    "in_process_client",
    "shim_self_checksum",
    "startup_verify",
    "track_step",
]
