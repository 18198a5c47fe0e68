"""The nine acceptance criteria, each at its stated size and tolerance.

Every test prints one PASS/FAIL line; the same lines are collected into an
"acceptance criteria" section of the pytest terminal summary.
"""

import hashlib
import itertools
import json
import random
import time

import jwt as pyjwt
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ajwt import reasons
from ajwt.audit import HashChainLog
from ajwt.core import (
    AgentProof,
    AgentSignature,
    IntentClaims,
    TokenClaims,
    ToolDescriptor,
    agent_checksum,
    canonicalize_agent_signature,
    compute_checksum,
    generate_pop_keypair,
    mint_token,
    verify_token,
)
from ajwt.core.canonical import b64url_decode, b64url_encode
from ajwt.core.tokens import TokenError
from ajwt.harness import build_env, run_all
from ajwt.harness.bench import IDENTITY_P50_LIMIT_MS, VERIFY_P50_LIMIT_MS, VERIFY_P95_LIMIT_MS, bench_identity, bench_verify
from ajwt.harness.env import API_URL
from ajwt.harness.runner import TOKEN_LAYER_THREATS
from ajwt.idp import IdentityProvider, IdpConfig, StepDef, TokenDenied, WorkflowDefinition

from expected import AFTER_CODES
from vectors import VECTORS

ISSUER = "https://idp.example.com"
AUDIENCE = "api.example.com"
NOW = 1719570900


@pytest.fixture(scope="module")
def issuer():
    from ajwt.core import generate_issuer_key

    return generate_issuer_key()


def report(request, passed: bool, detail: str) -> None:
    number, title = request.node.get_closest_marker("criterion").args
    request.node.acceptance_detail = detail
    print(f"{'PASS' if passed else 'FAIL'}  criterion {number}: {title}  ({detail})")


# -- 1 ------------------------------------------------------------------------------------------


@pytest.mark.criterion(1, "threat blocking: 12/12 blocked with exact codes in < 60 s")
def test_threat_blocking(request, issuer):
    start = time.perf_counter()
    summary = run_all("after", seed=0, issuer_key=issuer)
    elapsed = time.perf_counter() - start
    observed = {res.threat_id: [a.observed for a in res.attempts] for res in summary.results}
    passed = len(summary.blocked) == 12 and observed == AFTER_CODES and summary.all_met and elapsed < 60
    report(request, passed, f"blocked {len(summary.blocked)}/12, exact codes {observed == AFTER_CODES}, {elapsed:.1f} s")
    assert passed, summary.table()


# -- 2 ------------------------------------------------------------------------------------------


@pytest.mark.criterion(2, "bearer-token baseline: token-layer threats succeed or go undetected")
def test_vulnerability_baseline(request, issuer):
    summary = run_all("before", seed=0, issuer_key=issuer)
    open_to = sorted(set(TOKEN_LAYER_THREATS) & set(summary.succeeded), key=lambda t: int(t[1:]))
    passed = set(TOKEN_LAYER_THREATS) <= set(summary.succeeded) and summary.all_met
    report(request, passed, f"succeeded: {', '.join(open_to)}")
    assert passed, summary.table()


# -- 3 ------------------------------------------------------------------------------------------


@pytest.mark.criterion(3, "verification overhead: p50 < 1 ms, p95 < 2 ms over 10,000 requests")
def test_verification_overhead(request, issuer):
    result = bench_verify(10_000, seed=0, issuer_key=issuer)
    passed = result.iterations >= 10_000 and result.p50 < VERIFY_P50_LIMIT_MS and result.p95 < VERIFY_P95_LIMIT_MS
    report(request, passed, f"n={result.iterations} p50={result.p50:.3f} ms p95={result.p95:.3f} ms")
    assert passed


# -- 4 ------------------------------------------------------------------------------------------


@pytest.mark.criterion(4, "shim identity overhead: p50 < 2 ms over 10,000 calls")
def test_shim_identity_overhead(request):
    result = bench_identity(10_000, seed=0)
    passed = result.iterations >= 10_000 and result.p50 < IDENTITY_P50_LIMIT_MS
    report(request, passed, f"n={result.iterations} p50={result.p50:.3f} ms p95={result.p95:.3f} ms")
    assert passed


# -- 5 ------------------------------------------------------------------------------------------

names = st.text(st.characters(codec="utf-8", exclude_categories=("Cs",)), min_size=1, max_size=24)
idents = st.from_regex(r"[a-z][a-z0-9_]{0,15}", fullmatch=True)


@st.composite
def claim_sets(draw):
    iat = draw(st.integers(NOW - 10**6, NOW))
    exp = draw(st.integers(NOW + 1, NOW + 10**6))
    claims = TokenClaims(
        iss=ISSUER,
        sub=draw(names),
        aud=AUDIENCE,
        exp=exp,
        iat=iat,
        jti=draw(names),
        scope=" ".join(draw(st.lists(st.from_regex(r"[a-z]+:[a-z]+", fullmatch=True), max_size=4))),
    )
    if draw(st.booleans()):
        chain = draw(st.lists(idents, min_size=1, max_size=6))
        claims.intent = IntentClaims(
            workflow_id=draw(idents),
            workflow_step=draw(idents),
            executed_by=chain[-1],
            initiated_by=chain[0],
            delegation_chain=chain,
            step_sequence_hash=str(compute_checksum(draw(st.binary(max_size=32)))),
            execution_context=draw(st.dictionaries(idents, names, max_size=4)),
            chain_tag=draw(st.none() | st.just("hmac-sha256:" + "ab" * 32)),
        )
        claims.agent_proof = AgentProof(str(compute_checksum(draw(st.binary(max_size=16)))), draw(idents), draw(idents))
        claims.cnf_jkt = b64url_encode(draw(st.binary(min_size=32, max_size=32)))
    return claims


@pytest.mark.criterion(5, "token round trip: 1,000 claim sets, every single-byte payload mutation rejected")
def test_token_round_trip(request, issuer):
    keys = {issuer.kid: issuer.public_key}
    stats = {"claim_sets": 0, "mutations": 0}

    @settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(claims=claim_sets(), data=st.data())
    def check(claims, data):
        token = mint_token(claims, issuer)
        assert verify_token(token, keys, ISSUER, AUDIENCE, NOW) == claims
        header, payload_text, signature = token.split(".")
        original = b64url_decode(payload_text)
        for _ in range(5):
            payload = bytearray(original)
            pos = data.draw(st.integers(0, len(payload) - 1))
            payload[pos] = (payload[pos] + data.draw(st.integers(1, 255))) % 256
            forged = ".".join([header, b64url_encode(bytes(payload)), signature])
            with pytest.raises(TokenError):
                verify_token(forged, keys, ISSUER, AUDIENCE, NOW)
            stats["mutations"] += 1
        stats["claim_sets"] += 1

    check()
    passed = stats["claim_sets"] >= 1000
    report(request, passed, f"{stats['claim_sets']} claim sets, {stats['mutations']} mutations rejected")
    assert passed


# -- 6 ------------------------------------------------------------------------------------------

scalars = st.one_of(st.none(), st.booleans(), st.integers(-10**9, 10**9), st.floats(allow_nan=False, allow_infinity=False), names)


@st.composite
def signatures(draw):
    slots = draw(st.lists(idents, max_size=4, unique=True))
    template = draw(names) + "".join(f" {{{s}}}" for s in slots)
    tool_names = draw(st.lists(idents, max_size=5, unique=True))
    tools = [ToolDescriptor(n, draw(names), draw(st.text(max_size=20))) for n in tool_names]
    config = draw(st.dictionaries(idents, scalars, max_size=5))
    return AgentSignature(template, slots, tools, config)


def _mutations(sig: AgentSignature):
    """Every single-field edit of ``sig``, as new signatures."""
    d = sig.to_dict()
    yield dict(d, prompt_template=d["prompt_template"] + "!")
    for i, tool in enumerate(d["tools"]):
        for field in ("name", "signature", "description"):
            tools = [dict(t) for t in d["tools"]]
            tools[i][field] = tool[field] + "_x"
            yield dict(d, tools=tools)
    yield dict(d, tools=d["tools"] + [{"name": "zz_extra_tool", "signature": "", "description": ""}])
    if d["tools"]:
        yield dict(d, tools=d["tools"][1:])
    for key, value in d["config"].items():
        replacement = "changed" if value != "changed" else "other"
        yield dict(d, config=dict(d["config"], **{key: replacement}))
    yield dict(d, config=dict(d["config"], zz_extra_key=1))
    if d["substitution_slots"]:
        yield dict(d, substitution_slots=d["substitution_slots"][1:])


@pytest.mark.criterion(6, "checksum determinism: 1,000 signatures, permutation-invariant, mutation-sensitive, 10 oracle vectors")
def test_checksum_determinism(request):
    oracle_hits = 0
    for sig_dict, canonical, digest in VECTORS:
        expected = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
        sig = AgentSignature.from_dict(sig_dict)
        if expected == digest and canonicalize_agent_signature(sig) == canonical.encode("utf-8") and str(agent_checksum(sig)) == "sha256:" + digest:
            oracle_hits += 1
    stats = {"signatures": 0, "mutations": 0}

    @settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(sig=signatures(), rnd=st.randoms(use_true_random=False))
    def check(sig, rnd):
        base = str(agent_checksum(sig))
        tools = list(sig.tools)
        rnd.shuffle(tools)
        items = list(sig.config.items())
        rnd.shuffle(items)
        slots = list(sig.substitution_slots)
        rnd.shuffle(slots)
        assert str(agent_checksum(AgentSignature(sig.prompt_template, slots, tools, dict(items)))) == base
        for mutated in _mutations(sig):
            assert str(agent_checksum(AgentSignature.from_dict(mutated))) != base, mutated
            stats["mutations"] += 1
        stats["signatures"] += 1

    check()
    passed = oracle_hits == len(VECTORS) == 10 and stats["signatures"] >= 1000
    report(request, passed, f"{stats['signatures']} signatures, {stats['mutations']} mutations detected, oracle {oracle_hits}/10")
    assert passed


# -- 7 ------------------------------------------------------------------------------------------


def random_dag(rng: random.Random, size: int):
    steps = [f"s{i}" for i in range(size)]
    order = steps[:]
    rng.shuffle(order)
    edges = [(a, b) for i, a in enumerate(order) for b in order[i + 1 :] if rng.random() < 0.45]
    return steps, edges


def legal_paths(steps, edges):
    """Every path that starts at a node with no incoming edge, found by exhaustive walking."""
    incoming = {b for _, b in edges}
    out = set()
    stack = [(s,) for s in steps if s not in incoming]
    while stack:
        path = stack.pop()
        out.add(path)
        stack.extend(path + (b,) for a, b in edges if a == path[-1])
    return out


def dag_idp(issuer, steps, edges):
    idp = IdentityProvider(
        IdpConfig(ISSUER, AUDIENCE, grants={"g": {"s:run"}}, chain_key=b"c" * 32, seed=1), issuer_key=issuer, clock=lambda: NOW
    )
    idp.publish_shim_version("1.0.0", str(compute_checksum(b"shim")))
    client, secret, _ = idp.register_client("g", str(compute_checksum(b"client")))
    for i, agent in enumerate(["lead", "worker"]):
        agent_sig = AgentSignature(f"{agent} prompt")
        key = generate_pop_keypair(agent, NOW, seed=bytes([i + 9]) * 32)
        idp.register_agent(client.client_id, "g", agent, agent_sig, key.public_jwk(), "1")
    definition = WorkflowDefinition("dag", [StepDef(s, {"worker"}, {"s:run"}) for s in steps], edges, initiators={"lead"})
    idp.register_workflow(client.client_id, "g", definition)
    base = {
        "grant_type": "agent_checksum",
        "client_id": client.client_id,
        "client_secret": secret,
        "agent_id": "worker",
        "runtime_checksum": str(agent_checksum(AgentSignature("worker prompt"))),
        "workflow_id": "dag",
        "delegation_chain": ["lead", "worker"],
        "shim_checksum": str(compute_checksum(b"shim")),
    }
    return idp, base


@pytest.mark.criterion(7, "workflow legality: brute-force oracle agrees with the IDP on every (sequence, next step)")
def test_workflow_legality_oracle(request, issuer):
    rng = random.Random(7)
    sizes = [6, 6, 5, 4, 3, 2]
    pairs = disagreements = legal = 0
    for size in sizes:
        steps, edges = random_dag(rng, size)
        paths = legal_paths(steps, edges)
        idp, base = dag_idp(issuer, steps, edges)
        for length in range(size):
            for seq in itertools.product(steps, repeat=length):
                for nxt in steps:
                    expected_legal = seq + (nxt,) in paths
                    try:
                        idp.issue_intent_token(dict(base, executed_steps=list(seq), workflow_step=nxt))
                        idp_illegal = False
                    except TokenDenied as exc:
                        idp_illegal = exc.reason == reasons.ILLEGAL_STEP_TRANSITION
                        assert idp_illegal, f"unexpected denial {exc.reason} for {seq} -> {nxt}"
                    pairs += 1
                    legal += expected_legal
                    disagreements += expected_legal == idp_illegal
    passed = disagreements == 0
    report(request, passed, f"{len(sizes)} DAGs, {pairs} pairs, {legal} legal, {disagreements} disagreements")
    assert passed


# -- 8 ------------------------------------------------------------------------------------------


def _mutate(log: HashChainLog, rng: random.Random) -> str:
    i = rng.randrange(len(log.entries))
    entry = log.entries[i]
    kind = rng.choice(["body", "timestamp", "sequence", "prev", "hash", "delete", "swap", "duplicate", "truncate"])
    if kind == "body":
        key = rng.choice(sorted(entry.body))
        entry.body[key] = f"{entry.body[key]}~"
    elif kind == "timestamp":
        entry.timestamp += rng.choice([-1, 1])
    elif kind == "sequence":
        entry.sequence_no += rng.choice([-1, 1])
    elif kind == "prev":
        entry.prev_entry_hash = "sha256:" + "f" * 64 if entry.prev_entry_hash != "sha256:" + "f" * 64 else "sha256:" + "e" * 64
    elif kind == "hash":
        entry.entry_hash = "sha256:" + hashlib.sha256(entry.entry_hash.encode()).hexdigest()
    elif kind == "delete":
        del log.entries[i]
    elif kind == "swap":
        j = rng.choice([k for k in range(len(log.entries)) if k != i])
        log.entries[i], log.entries[j] = log.entries[j], log.entries[i]
    elif kind == "duplicate":
        log.entries.insert(i, log.entries[i])
    else:
        del log.entries[i:]
    return kind


@pytest.mark.criterion(8, "log integrity: 500+ random events verify, any single historical mutation detected")
def test_log_integrity(request, issuer):
    rng = random.Random(8)
    steps, edges = ["a", "b", "c"], [("a", "b"), ("b", "c")]
    idp, base = dag_idp(issuer, steps, edges)
    bad = {
        "agent_id": "ghost",
        "runtime_checksum": "sha256:" + "0" * 64,
        "workflow_id": "missing",
        "workflow_step": "zz",
        "client_secret": "wrong",
        "delegation_chain": ["worker"],
    }
    for _ in range(600):
        seq = ["a", "b", "c"][: rng.randrange(3)]
        req = dict(base, executed_steps=seq, workflow_step=steps[len(seq)])
        if rng.random() < 0.5:
            field = rng.choice(sorted(bad))
            req[field] = bad[field]
        try:
            idp.issue_intent_token(req)
        except TokenDenied:
            pass
    log = idp.store.log
    intact = idp.verify_log_integrity() and len(log) >= 500

    entry = log.entries[rng.randrange(len(log))]
    saved = dict(entry.body)
    entry.body["outcome"] = "tampered"
    live_detected = not idp.verify_log_integrity()
    entry.body.clear()
    entry.body.update(saved)
    intact = intact and idp.verify_log_integrity()

    snapshot = json.dumps(log.to_dict())
    detected = kinds = 0
    seen_kinds = set()
    for _ in range(1000):
        copy = HashChainLog.from_dict(json.loads(snapshot))
        seen_kinds.add(_mutate(copy, rng))
        detected += not copy.verify()
        kinds += 1
    passed = intact and live_detected and detected == kinds
    report(request, passed, f"{len(log)} events intact, {detected}/{kinds} mutations detected across {len(seen_kinds)} kinds")
    assert passed


# -- 9 ------------------------------------------------------------------------------------------


@pytest.mark.criterion(9, "legacy compatibility: intent token passes a plain JWT verifier, plain token served where intent is optional")
def test_legacy_compatibility(request, issuer):
    env = build_env("after", seed=0, issuer_key=issuer)
    try:
        env.run_plan(env.new_tracker(), 1)
        intent_token = env.captured[-1].headers["authorization"].split()[1]
        payload = pyjwt.decode(
            intent_token, issuer.public_key, algorithms=["RS256"], audience=AUDIENCE, issuer=ISSUER,
            options={"verify_exp": False, "verify_iat": False},
        )
        plain_ok = payload["sub"] == env.client_id and "intent" in payload
        legacy = env.legacy.access_token()
        resp = env.http.get(API_URL + "/health", headers={"Authorization": f"Bearer {legacy}"})
        served = resp.status_code == 200
        strict = env.http.get(API_URL + "/repo/manifests", headers={"Authorization": f"Bearer {legacy}"})
        still_enforced = strict.status_code == 403 and strict.json()["reason"] == reasons.INTENT_MISSING
    finally:
        env.close()
    passed = plain_ok and served and still_enforced
    report(request, passed, f"plain verifier {plain_ok}, plain token on optional route {resp.status_code}, on intent route {strict.status_code}")
    assert passed
