"""Mock repository and vulnerability-database APIs guarded by the enforcement middleware."""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, Request

from ajwt.rs.policy import EndpointPolicy, PolicyDocument
from ajwt.rs.server import PolicyEnforcementMiddleware, ResourceServer

WORKFLOW_ID = "vulnerability_assessment_v2"

STEPS = [
    ("fetch_manifests", {"planner"}, {"repo:read"}),
    ("classify_ecosystem", {"classifier"}, {"vulndb:read"}),
    ("query_vulnerabilities", {"planner"}, {"vulndb:read"}),
    ("apply_patch", {"patcher"}, {"repo:write"}),
]
EDGES = [
    ("fetch_manifests", "classify_ecosystem"),
    ("classify_ecosystem", "query_vulnerabilities"),
    ("query_vulnerabilities", "apply_patch"),
]


def workflow_definition() -> dict[str, Any]:
    return {
        "workflow_id": WORKFLOW_ID,
        "steps": [
            {"step_id": s, "allowed_agents": sorted(agents), "required_scopes": sorted(scopes)}
            for s, agents, scopes in STEPS
        ],
        "edges": [list(e) for e in EDGES],
        "initiators": ["supervisor"],
    }


def default_policy() -> PolicyDocument:
    def ep(method: str, route: str, scope: str, step: str) -> EndpointPolicy:
        return EndpointPolicy(method, route, frozenset({scope}), frozenset({(WORKFLOW_ID, step)}))

    return PolicyDocument(
        [
            ep("GET", "/repo/manifests", "repo:read", "fetch_manifests"),
            ep("GET", "/vulndb/ecosystems", "vulndb:read", "classify_ecosystem"),
            ep("POST", "/vulndb/query", "vulndb:read", "query_vulnerabilities"),
            ep("POST", "/repo/patches", "repo:write", "apply_patch"),
            EndpointPolicy("GET", "/health", require_intent=False),
        ]
    )


MANIFESTS = [
    {"path": "requirements.txt", "packages": ["requests==2.19.0", "jinja2==2.10"]},
    {"path": "package.json", "packages": ["lodash@4.17.15"]},
]
ADVISORIES = {
    "requests==2.19.0": {"id": "GHSA-x84v-xcm2-53pg", "fixed": "2.20.0"},
    "jinja2==2.10": {"id": "GHSA-462w-v97r-4m45", "fixed": "2.10.1"},
    "lodash@4.17.15": {"id": "GHSA-p6mc-m468-83gw", "fixed": "4.17.19"},
}


def create_mock_api(server: ResourceServer) -> FastAPI:
    app = FastAPI(title="mock repository and vulnerability database")
    app.state.patches = []

    def caller(request: Request) -> dict[str, Any]:
        claims = request.state.claims
        out = {"sub": claims.sub}
        if claims.intent is not None:
            out["executed_by"] = claims.intent.executed_by
            out["workflow_step"] = claims.intent.workflow_step
        return out

    @app.get("/health")
    async def health() -> dict[str, str]:
        return {"status": "ok"}

    @app.get("/repo/manifests")
    async def manifests(request: Request) -> dict[str, Any]:
        return {"manifests": MANIFESTS, "caller": caller(request)}

    @app.get("/vulndb/ecosystems")
    async def ecosystems(request: Request) -> dict[str, Any]:
        return {"ecosystems": ["PyPI", "npm", "crates.io"], "caller": caller(request)}

    @app.post("/vulndb/query")
    async def query(request: Request) -> dict[str, Any]:
        body = await request.json()
        found = [ADVISORIES[p] | {"package": p} for p in body.get("packages", []) if p in ADVISORIES]
        return {"advisories": found, "caller": caller(request)}

    @app.post("/repo/patches", status_code=201)
    async def patches(request: Request) -> dict[str, Any]:
        body = await request.json()
        patch_id = f"patch-{len(app.state.patches) + 1}"
        app.state.patches.append({"id": patch_id, **body})
        return {"patch_id": patch_id, "caller": caller(request)}

    app.add_middleware(PolicyEnforcementMiddleware, server=server)
    return app
