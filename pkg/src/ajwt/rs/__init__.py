"""Resource-server middleware: request verification against declarative route policy."""

from ajwt.rs.policy import EndpointPolicy, PolicyDocument
from ajwt.rs.replay import ReplayCache
from ajwt.rs.server import IdpTrust, PolicyEnforcementMiddleware, ResourceServer, StaticTrust
from ajwt.rs.verifier import Decision, RequestView, VerifierConfig, verify_request

__all__ = [
    "Decision",
    "EndpointPolicy",
    "IdpTrust",
    "PolicyDocument",
    "PolicyEnforcementMiddleware",
    "ReplayCache",
    "RequestView",
    "ResourceServer",
    "StaticTrust",
    "VerifierConfig",
    "verify_request",
]
