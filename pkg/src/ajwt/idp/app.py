"""HTTP surface of the identity provider."""

from __future__ import annotations

from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from ajwt import reasons
from ajwt.core.canonical import Checksum
from ajwt.idp.service import (
    AGENT_CHECKSUM_GRANT,
    CLIENT_CREDENTIALS_GRANT,
    IdentityProvider,
    IdpError,
    RegistrationError,
    TokenDenied,
)

SHIM_HEADER = "x-shim-checksum"
# endpoints a shim must reach before it can know whether it is released
_UNCHECKED_PATHS = {"/.well-known/shim-versions", "/.well-known/jwks"}


def _error(exc: IdpError) -> JSONResponse:
    error = "access_denied" if isinstance(exc, TokenDenied) else "registration_failed"
    if exc.reason in (reasons.INVALID_REQUEST, reasons.UNSUPPORTED_GRANT_TYPE):
        error = exc.reason
    return JSONResponse({"error": error, "reason": exc.reason, "detail": str(exc)}, status_code=exc.status)


async def _json_body(request: Request) -> dict[str, Any]:
    try:
        body = await request.json()
    except ValueError as exc:
        raise RegistrationError(reasons.INVALID_REQUEST, f"body is not JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise RegistrationError(reasons.INVALID_REQUEST, "body must be a JSON object")
    return body


def _require(body: dict[str, Any], *names: str) -> None:
    missing = [n for n in names if n not in body]
    if missing:
        raise RegistrationError(reasons.INVALID_REQUEST, f"missing field(s): {', '.join(missing)}")


def create_idp_app(idp: IdentityProvider) -> FastAPI:
    app = FastAPI(title="ajwt identity provider")
    app.state.idp = idp

    @app.middleware("http")
    async def shim_header_check(request: Request, call_next):  # type: ignore[no-untyped-def]
        # /token validates the header itself so the denial lands in the event log
        value: Optional[str] = request.headers.get(SHIM_HEADER)
        if value is not None and request.url.path not in _UNCHECKED_PATHS and request.url.path != "/token":
            try:
                ok = str(Checksum.parse(value)) in idp.well_known_shim_versions().values()
            except ValueError:
                ok = False
            if not ok:
                return _error(TokenDenied(reasons.SHIM_CHECKSUM_UNKNOWN, "shim checksum is not a released version"))
        return await call_next(request)

    @app.exception_handler(IdpError)
    async def idp_error(_: Request, exc: IdpError) -> JSONResponse:
        return _error(exc)

    @app.post("/clients")
    async def post_clients(request: Request) -> JSONResponse:
        body = await _json_body(request)
        _require(body, "authorization_grant", "client_checksum")
        scopes = body.get("scopes")
        rec, secret, created = idp.register_client(
            str(body["authorization_grant"]), str(body["client_checksum"]),
            set(scopes) if scopes is not None else None,
        )
        out: dict[str, Any] = {
            "client_id": rec.client_id,
            "client_checksum": rec.client_checksum,
            "granted_scopes": sorted(rec.granted_scopes),
        }
        if secret is not None:
            out["client_secret"] = secret
        return JSONResponse(out, status_code=201 if created else 200)

    @app.post("/agents")
    async def post_agents(request: Request) -> JSONResponse:
        body = await _json_body(request)
        _require(body, "client_id", "authorization_grant", "agent_id", "agent_signature", "pop_public_jwk")
        rec = idp.register_agent(
            client_id=str(body["client_id"]),
            authorization_grant=str(body["authorization_grant"]),
            agent_id=str(body["agent_id"]),
            signature=body["agent_signature"],
            pop_public_jwk=body["pop_public_jwk"],
            version=str(body.get("version", "1")),
            client_checksum=body.get("client_checksum"),
        )
        return JSONResponse(
            {
                "agent_id": rec.agent_id,
                "agent_checksum": rec.agent_checksum,
                "registration_id": rec.registration_id,
                "version": rec.version,
                "created_at": rec.created_at,
            },
            status_code=201,
        )

    @app.post("/workflows")
    async def post_workflows(request: Request) -> JSONResponse:
        body = await _json_body(request)
        _require(body, "client_id", "authorization_grant", "definition")
        defn = idp.register_workflow(str(body["client_id"]), str(body["authorization_grant"]), body["definition"])
        return JSONResponse({"workflow_id": defn.workflow_id, "version": defn.version}, status_code=201)

    @app.post("/agents/metadata")
    async def agent_metadata(request: Request) -> JSONResponse:
        body = await _json_body(request)
        _require(body, "client_id", "authorization_grant", "agent_id")
        return JSONResponse(
            idp.agent_metadata(str(body["client_id"]), str(body["authorization_grant"]), str(body["agent_id"]))
        )

    @app.post("/token")
    async def post_token(request: Request) -> JSONResponse:
        body = await _json_body(request)
        grant_type = body.get("grant_type")
        if grant_type == CLIENT_CREDENTIALS_GRANT:
            _require(body, "client_id", "client_secret")
            token = idp.issue_access_token(str(body["client_id"]), str(body["client_secret"]), body.get("scope"))
            ttl = idp.config.access_token_ttl
        elif grant_type == AGENT_CHECKSUM_GRANT:
            token = idp.issue_intent_token(body, shim_header=request.headers.get(SHIM_HEADER))
            ttl = idp.config.intent_token_ttl
        else:
            raise TokenDenied(reasons.UNSUPPORTED_GRANT_TYPE, f"grant_type {grant_type!r}", status=400)
        return JSONResponse({"access_token": token, "token_type": "Bearer", "expires_in": ttl})

    @app.get("/.well-known/shim-versions")
    async def shim_versions() -> dict[str, str]:
        return idp.well_known_shim_versions()

    @app.get("/.well-known/jwks")
    async def jwks() -> dict[str, Any]:
        return idp.jwks()

    @app.get("/log/verify")
    async def log_verify() -> dict[str, Any]:
        return {"valid": idp.verify_log_integrity(), "entries": len(idp.store.log)}

    return app
