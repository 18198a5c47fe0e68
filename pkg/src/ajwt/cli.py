"""``ajwt`` command line: keys, registration, token inspection, servers, demo and threat runs."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Optional, Sequence

import httpx

from ajwt.core.canonical import b64url_decode, b64url_encode
from ajwt.core.pop import generate_pop_keypair, keypair_from_private_bytes, thumbprint_b64url
from ajwt.core.tokens import TokenError, keys_from_jwks, verify_token

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISMATCH = 2

log = logging.getLogger("ajwt")


class CliError(Exception):
    pass


def _load_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc


def _print_json(data: Any) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


# -- keygen -------------------------------------------------------------------


def cmd_keygen(args: argparse.Namespace, http: Optional[httpx.Client]) -> int:
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    key = generate_pop_keypair(args.agent_id, time.time())
    public = key.public_jwk()
    private = dict(public, d=b64url_encode(key.private_bytes()))
    pub_path = out / f"{args.agent_id}.public.jwk.json"
    priv_path = out / f"{args.agent_id}.private.jwk.json"
    pub_path.write_text(json.dumps(public, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    fd = os.open(priv_path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(private, indent=2, sort_keys=True) + "\n")
    print(f"kid: {key.kid}")
    print(f"thumbprint: {thumbprint_b64url(key)}")
    print(f"public: {pub_path}")
    print(f"private: {priv_path}")
    return EXIT_OK


def load_private_jwk(path: str) -> Any:
    jwk = _load_json(path)
    return keypair_from_private_bytes(jwk.get("kid", ""), b64url_decode(jwk["d"]))


# -- register -----------------------------------------------------------------


def _client(args: argparse.Namespace, http: Optional[httpx.Client]) -> httpx.Client:
    return http if http is not None else httpx.Client(timeout=10)


def cmd_register(args: argparse.Namespace, http: Optional[httpx.Client]) -> int:
    manifest = _load_json(args.manifest)
    base = args.idp_url.rstrip("/")
    if args.kind == "agent" and "pop_public_jwk" not in manifest and "pop_public_key_file" in manifest:
        key_path = Path(args.manifest).parent / manifest.pop("pop_public_key_file")
        manifest["pop_public_jwk"] = _load_json(str(key_path))
    path = {"client": "/clients", "agent": "/agents", "workflow": "/workflows"}[args.kind]
    client = _client(args, http)
    try:
        resp = client.post(base + path, json=manifest)
    except httpx.HTTPError as exc:
        raise CliError(f"cannot reach IDP at {base}: {exc}") from exc
    body = resp.json() if resp.headers.get("content-type", "").startswith("application/json") else {"raw": resp.text}
    if resp.status_code >= 400:
        print(f"registration failed: {body.get('reason', resp.status_code)}: {body.get('detail', '')}", file=sys.stderr)
        return EXIT_ERROR
    if args.kind == "client":
        print(f"client_id: {body['client_id']}")
        if "client_secret" in body:
            print(f"client_secret: {body['client_secret']}")
    elif args.kind == "agent":
        print(f"registration_id: {body['registration_id']}")
        print(f"agent_checksum: {body['agent_checksum']}")
    else:
        print(f"workflow_id: {body['workflow_id']} version: {body['version']}")
    return EXIT_OK


# -- inspect ------------------------------------------------------------------


def cmd_inspect(args: argparse.Namespace, http: Optional[httpx.Client]) -> int:
    token = args.token
    if token == "-":
        token = sys.stdin.read().strip()
    if args.jwks:
        jwks = _load_json(args.jwks)
    else:
        url = args.jwks_url or args.idp_url.rstrip("/") + "/.well-known/jwks"
        try:
            jwks = _client(args, http).get(url).json()
        except (httpx.HTTPError, ValueError) as exc:
            raise CliError(f"cannot fetch JWKS from {url}: {exc}") from exc
    now = int(args.now) if args.now is not None else int(time.time())
    try:
        claims = verify_token(token, keys_from_jwks(jwks), args.issuer, args.audience, now)
    except TokenError as exc:
        print(f"verification failed: {exc.reason}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    rows = [
        ("iss", claims.iss), ("sub", claims.sub), ("aud", claims.aud), ("jti", claims.jti),
        ("iat", claims.iat), ("exp", claims.exp), ("scope", claims.scope),
    ]
    if claims.cnf_jkt:
        rows.append(("cnf.jkt", claims.cnf_jkt))
    if claims.agent_proof is not None:
        rows += [(f"agent_proof.{k}", v) for k, v in claims.agent_proof.to_dict().items()]
    width = max(len(k) for k, _ in rows) + 2
    for k, v in rows:
        print(f"{k:<{width}}{v}")
    if claims.intent is None:
        print("no intent claims (legacy token)")
    else:
        print("intent:")
        for k, v in claims.intent.to_dict().items():
            print(f"  {k:<{width}}{json.dumps(v) if not isinstance(v, str) else v}")
    return EXIT_OK


# -- servers ------------------------------------------------------------------


def build_idp_from_config(config: dict[str, Any]) -> Any:
    from ajwt.idp.service import IdentityProvider, IdpConfig
    from ajwt.idp.store import FileStore, MemoryStore
    from ajwt.shim.client import SHIM_VERSION, shim_self_checksum

    chain_key = bytes.fromhex(config["chain_key_hex"]) if "chain_key_hex" in config else os.urandom(32)
    idp = IdentityProvider(
        IdpConfig(
            issuer=config.get("issuer", "https://idp.example.com"),
            audience=config.get("audience", "api.example.com"),
            intent_token_ttl=int(config.get("intent_token_ttl", 120)),
            access_token_ttl=int(config.get("access_token_ttl", 900)),
            grants={g: set(s) for g, s in config.get("grants", {}).items()},
            chain_key=chain_key,
        ),
        store=FileStore(config["store_path"]) if config.get("store_path") else MemoryStore(),
    )
    for version, checksum in config.get("shim_versions", {}).items():
        idp.publish_shim_version(version, checksum)
    if config.get("publish_local_shim", True):
        idp.publish_shim_version(SHIM_VERSION, shim_self_checksum())
    return idp


def cmd_serve_idp(args: argparse.Namespace, http: Optional[httpx.Client]) -> int:
    import uvicorn

    from ajwt.idp.app import create_idp_app

    config = _load_json(args.config) if args.config else {}
    app = create_idp_app(build_idp_from_config(config))
    uvicorn.run(app, host=args.host or config.get("host", "127.0.0.1"), port=args.port or config.get("port", 8080))
    return EXIT_OK


def cmd_serve_rs(args: argparse.Namespace, http: Optional[httpx.Client]) -> int:
    import uvicorn

    from ajwt.harness.mock_api import create_mock_api, default_policy
    from ajwt.rs.policy import PolicyDocument
    from ajwt.rs.server import IdpTrust, ResourceServer
    from ajwt.rs.verifier import VerifierConfig

    config = _load_json(args.config) if args.config else {}
    policy = PolicyDocument.from_dict(config["policy"]) if "policy" in config else default_policy()
    trust = IdpTrust(httpx.Client(timeout=10), args.idp_url, ttl=float(config.get("trust_ttl", 300)))
    server = ResourceServer(
        policy,
        trust,
        VerifierConfig(
            config.get("issuer", "https://idp.example.com"),
            config.get("audience", "api.example.com"),
            enforce_intent=args.phase != "before",
        ),
    )
    uvicorn.run(create_mock_api(server), host=args.host or config.get("host", "127.0.0.1"), port=args.port or config.get("port", 8081))
    return EXIT_OK


# -- demo / threats / bench -------------------------------------------------------


def cmd_demo(args: argparse.Namespace, http: Optional[httpx.Client]) -> int:
    from ajwt.harness.agents import CANNED_PLAN
    from ajwt.harness.env import build_env

    phase = args.phase or "after"
    env = build_env(phase, args.seed)
    try:
        tracker = env.new_tracker() if phase == "after" else None
        for (step, agent_id, method, path, _, _), resp in zip(CANNED_PLAN, env.run_plan(tracker, len(CANNED_PLAN))):
            print(f"{step:<24} {agent_id:<11} {method:<5} {path:<20} -> {resp.status_code} {resp.json().get('caller')}")
        if tracker is not None:
            print(f"delegation chain: {' -> '.join(tracker.delegation_chain)}")
        print(f"IDP events: {len(env.idp.store.log)} (log valid: {env.idp.verify_log_integrity()})")
        print(f"RS decisions: {len(env.rs.log)} (log valid: {env.rs.verify_log_integrity()})")
    finally:
        env.close()
    return EXIT_OK


def cmd_threats(args: argparse.Namespace, http: Optional[httpx.Client]) -> int:
    from ajwt.harness.runner import HarnessConfig, run_all, write_results
    from ajwt.harness.scenarios import SCENARIOS_BY_ID

    cfg = HarnessConfig.load(args.config) if args.config else HarnessConfig()
    phase = args.phase or cfg.phase
    threats = args.threat or cfg.threats
    seed = args.seed if args.seed is not None else cfg.seed
    out = args.out or cfg.output
    for t in threats or []:
        if t.upper() not in SCENARIOS_BY_ID:
            args.parser.error(f"unknown threat id {t!r}; choose from {', '.join(SCENARIOS_BY_ID)}")
    summary = run_all(phase, seed=seed, threats=threats, stress=args.stress or cfg.stress)
    print(summary.table())
    if out:
        write_results(summary, out)
        print(f"results written to {out}")
    return EXIT_OK if summary.all_met else EXIT_MISMATCH


def cmd_bench(args: argparse.Namespace, http: Optional[httpx.Client]) -> int:
    from ajwt.harness.bench import run_benchmarks

    report = run_benchmarks(args.iterations, args.seed or 0)
    _print_json(report)
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    return EXIT_OK if report["verify_ok"] and report["identity_ok"] else EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ajwt", description="Intent-token tooling for agentic clients.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func: Any, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func, parser=p)
        return p

    p = add("keygen", cmd_keygen, "generate an Ed25519 proof-of-possession key pair")
    p.add_argument("--agent-id", required=True)
    p.add_argument("--out", help="output directory (default: current)")

    p = add("register", cmd_register, "register a client, agent or workflow manifest")
    p.add_argument("kind", choices=["client", "agent", "workflow"])
    p.add_argument("manifest", help="JSON manifest")
    p.add_argument("--idp-url", default="http://127.0.0.1:8080")

    p = add("inspect", cmd_inspect, "verify a token and print its claims")
    p.add_argument("token", help="compact token, or - for stdin")
    p.add_argument("--idp-url", default="http://127.0.0.1:8080")
    p.add_argument("--jwks-url", help="JWKS location (default: <idp-url>/.well-known/jwks)")
    p.add_argument("--jwks", help="read the JWKS from a file instead")
    p.add_argument("--issuer", default="https://idp.example.com")
    p.add_argument("--audience", default="api.example.com")
    p.add_argument("--now", type=int, help="verification time in unix seconds")

    for name, func, default_port in (("serve-idp", cmd_serve_idp, 8080), ("serve-rs", cmd_serve_rs, 8081)):
        p = add(name, func, f"run the {'identity provider' if name == 'serve-idp' else 'mock resource server'}")
        p.add_argument("--config")
        p.add_argument("--host")
        p.add_argument("--port", type=int)
        if name == "serve-rs":
            p.add_argument("--idp-url", default="http://127.0.0.1:8080")
            p.add_argument("--phase", choices=["before", "after"], default="after")

    p = add("demo", cmd_demo, "run the scripted remediation workflow in-process")
    p.add_argument("--phase", choices=["before", "after"])
    p.add_argument("--seed", type=int, default=0)

    p = add("threats", cmd_threats, "run the threat scenarios")
    p.add_argument("--phase", choices=["before", "after"])
    p.add_argument("--threat", action="append", help="threat id (repeatable), e.g. T2")
    p.add_argument("--seed", type=int)
    p.add_argument("--stress", action="store_true", help="run scenarios concurrently")
    p.add_argument("--config", help="harness config JSON")
    p.add_argument("--out", help="write machine-readable results here")

    p = add("bench", cmd_bench, "measure verification and shim identity latency")
    p.add_argument("--iterations", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    return parser


def main(argv: Optional[Sequence[str]] = None, http: Optional[httpx.Client] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return int(args.func(args, http))
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
