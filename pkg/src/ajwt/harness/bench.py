"""Latency of the resource-server verification core and of the shim identity path."""

from __future__ import annotations

import random
import statistics
import time
from dataclasses import dataclass
from typing import Any, Callable, Optional

import httpx

from ajwt.core.agent import agent_checksum
from ajwt.core.canonical import b64url_encode, canonical_json, compute_step_sequence_hash
from ajwt.core.pop import content_digest, generate_pop_keypair, sign_http_request, thumbprint_b64url
from ajwt.core.tokens import AgentProof, IntentClaims, IssuerKey, TokenClaims, generate_issuer_key, mint_token
from ajwt.harness.agents import build_agents
from ajwt.harness.env import AUDIENCE, ISSUER, START_TIME
from ajwt.harness.mock_api import WORKFLOW_ID, default_policy
from ajwt.rs.replay import ReplayCache
from ajwt.rs.verifier import RequestView, VerifierConfig, verify_request
from ajwt.shim.client import AgentContext, Shim, shim_self_checksum
from ajwt.shim.config import ShimConfig
from ajwt.shim.tracker import WorkflowTracker, track_step

VERIFY_P50_LIMIT_MS = 1.0
VERIFY_P95_LIMIT_MS = 2.0
IDENTITY_P50_LIMIT_MS = 2.0


@dataclass
class LatencyReport:
    name: str
    samples_ms: list[float]

    @property
    def iterations(self) -> int:
        return len(self.samples_ms)

    def percentile(self, q: float) -> float:
        ordered = sorted(self.samples_ms)
        idx = min(len(ordered) - 1, max(0, int(round(q / 100 * (len(ordered) - 1)))))
        return ordered[idx]

    @property
    def p50(self) -> float:
        return statistics.median(self.samples_ms)

    @property
    def p95(self) -> float:
        return self.percentile(95)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "iterations": self.iterations, "p50_ms": round(self.p50, 4), "p95_ms": round(self.p95, 4)}


def _time_each(items: list[Any], fn: Callable[[Any], Any]) -> list[float]:
    out = []
    clock = time.perf_counter_ns
    for item in items:
        t0 = clock()
        fn(item)
        out.append((clock() - t0) / 1e6)
    return out


def _signed_requests(n: int, issuer_key: IssuerKey, seed: int, intent: bool) -> list[RequestView]:
    rng = random.Random(seed)
    pop = generate_pop_keypair("planner", START_TIME, seed=rng.randbytes(32))
    body = canonical_json({"ecosystem": "PyPI", "packages": ["requests==2.19.0"]})
    digest = content_digest(body)
    jwk_header = b64url_encode(canonical_json(pop.public_jwk()))
    shim = shim_self_checksum()
    views = []
    for i in range(n):
        claims = TokenClaims(
            iss=ISSUER,
            sub="client_bench",
            aud=AUDIENCE,
            exp=START_TIME + 120,
            iat=START_TIME,
            jti=f"token_{rng.getrandbits(64):016x}_{i}",
            scope="vulndb:read",
        )
        if intent:
            claims.intent = IntentClaims(
                workflow_id=WORKFLOW_ID,
                workflow_step="query_vulnerabilities",
                executed_by="planner",
                initiated_by="supervisor",
                delegation_chain=["supervisor", "planner", "classifier", "planner"],
                step_sequence_hash=str(compute_step_sequence_hash(["fetch_manifests", "classify_ecosystem"])),
                chain_tag="hmac-sha256:" + "0" * 64,
            )
            claims.agent_proof = AgentProof("sha256:" + "1" * 64, "reg_bench", "1.0.0")
            claims.cnf_jkt = thumbprint_b64url(pop)
        token = mint_token(claims, issuer_key)
        headers = {"Authorization": f"Bearer {token}"}
        if intent:
            headers |= {"Content-Digest": digest, "Signature-Key": jwk_header, "X-Shim-Checksum": shim}
            sig_input, sig = sign_http_request("POST", "/vulndb/query", headers, digest, pop, START_TIME)
            headers |= {"Signature-Input": sig_input, "Signature": sig}
        views.append(RequestView.build("POST", "/vulndb/query", headers, body))
    return views


def bench_verify(
    iterations: int = 10_000, seed: int = 0, issuer_key: Optional[IssuerKey] = None, intent: bool = True
) -> LatencyReport:
    """Time :func:`verify_request` alone over distinct pre-signed requests; every one must be allowed."""
    key = issuer_key or generate_issuer_key()
    views = _signed_requests(iterations, key, seed, intent)
    policy = default_policy().find("POST", "/vulndb/query")
    assert policy is not None
    keys = {key.kid: key.public_key}
    shims = {"1.0.0": shim_self_checksum()}
    config = VerifierConfig(ISSUER, AUDIENCE, enforce_intent=intent)
    cache = ReplayCache()
    now = START_TIME + 1
    denied: list[str] = []

    def one(view: RequestView) -> None:
        decision = verify_request(view, policy, keys, shims, now, config, cache)
        if not decision.allow:
            denied.append(str(decision.reason))

    # warm caches and code paths on a few throwaway requests
    for view in _signed_requests(50, key, seed + 1, intent):
        verify_request(view, policy, keys, shims, now, config, ReplayCache())
    samples = _time_each(views, one)
    if denied:
        raise AssertionError(f"benchmark requests were denied: {sorted(set(denied))}")
    return LatencyReport("verify_request (intent + PoP)" if intent else "verify_request (plain bearer JWT)", samples)


class _BenchAgent:
    """Registered anchor whose method is the caller the shim resolves on the stack."""

    def __init__(self, agent_id: str):
        self.agent_id = agent_id

    def identify(self, shim: Shim, ctx: AgentContext, tracker: WorkflowTracker) -> Any:
        return shim.identity_request(ctx, tracker)


def bench_identity(iterations: int = 10_000, seed: int = 0) -> LatencyReport:
    """Time anchor resolution + live checksum + grant-request assembly, without the network round trip."""
    rng = random.Random(seed)
    shim = Shim(ShimConfig("http://idp.invalid", "client_bench", "secret"), httpx.Client(), clock=lambda: START_TIME)
    signature = build_agents()["planner"].signature
    anchor = _BenchAgent("planner")
    ctx = AgentContext("planner", signature, generate_pop_keypair("planner", START_TIME, seed=rng.randbytes(32)), anchor)
    ctx.bridge = shim.bridges.register(anchor, "planner", str(agent_checksum(signature)))
    shim.bridges.freeze()
    tracker = WorkflowTracker(WORKFLOW_ID, "supervisor")
    track_step(tracker, "fetch_manifests", "planner")
    for _ in range(100):
        anchor.identify(shim, ctx, tracker)
    samples = _time_each([None] * iterations, lambda _: anchor.identify(shim, ctx, tracker))
    shim.http.close()
    return LatencyReport("shim identity path", samples)


def run_benchmarks(iterations: int = 10_000, seed: int = 0) -> dict[str, Any]:
    key = generate_issuer_key()
    verify = bench_verify(iterations, seed, key, intent=True)
    legacy = bench_verify(iterations, seed, key, intent=False)
    identity = bench_identity(iterations, seed)
    return {
        "verify_request": verify.to_dict() | {"p50_limit_ms": VERIFY_P50_LIMIT_MS, "p95_limit_ms": VERIFY_P95_LIMIT_MS},
        "legacy_baseline": legacy.to_dict(),
        "shim_identity": identity.to_dict() | {"p50_limit_ms": IDENTITY_P50_LIMIT_MS},
        "verify_ok": verify.p50 < VERIFY_P50_LIMIT_MS and verify.p95 < VERIFY_P95_LIMIT_MS,
        "identity_ok": identity.p50 < IDENTITY_P50_LIMIT_MS,
    }
