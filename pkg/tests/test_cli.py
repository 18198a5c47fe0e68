import json

import pytest

from ajwt import cli
from ajwt.core import compute_checksum
from ajwt.core.pop import thumbprint_b64url
from ajwt.core.tokens import jwks_document
from ajwt.harness.agents import CANNED_PLAN
from ajwt.harness.env import AUDIENCE, IDP_URL, ISSUER, START_TIME, build_env
from ajwt.harness.mock_api import workflow_definition
from ajwt.idp import IdentityProvider, IdpConfig
from ajwt.idp.app import create_idp_app
from ajwt.shim.transport import in_process_client


@pytest.fixture(scope="module")
def issuer():
    from ajwt.core import generate_issuer_key

    return generate_issuer_key()


def test_keygen_writes_key_pair(tmp_path, capsys):
    assert cli.main(["keygen", "--agent-id", "planner", "--out", str(tmp_path)]) == cli.EXIT_OK
    out = capsys.readouterr().out
    public = json.loads((tmp_path / "planner.public.jwk.json").read_text())
    private_path = tmp_path / "planner.private.jwk.json"
    assert "d" not in public and public["kty"] == "OKP"
    assert oct(private_path.stat().st_mode & 0o777) == "0o600"
    key = cli.load_private_jwk(str(private_path))
    assert key.public_jwk() == public
    assert f"kid: {public['kid']}" in out
    assert f"thumbprint: {thumbprint_b64url(public)}" in out
    cli.main(["keygen", "--agent-id", "planner", "--out", str(tmp_path / "again")])
    assert json.loads((tmp_path / "again" / "planner.public.jwk.json").read_text())["kid"] != public["kid"]


def test_register_client_agent_and_workflow(tmp_path, capsys, issuer):
    idp = IdentityProvider(IdpConfig(ISSUER, AUDIENCE, grants={"g1": {"repo:read", "repo:write", "vulndb:read"}}), issuer_key=issuer)
    http = in_process_client({"idp.example.com": create_idp_app(idp)})

    manifest = tmp_path / "client.json"
    manifest.write_text(json.dumps({"authorization_grant": "g1", "client_checksum": str(compute_checksum(b"build"))}))
    assert cli.main(["register", "client", str(manifest), "--idp-url", IDP_URL], http=http) == cli.EXIT_OK
    client_id = capsys.readouterr().out.split("client_id: ")[1].split()[0]

    from ajwt.harness.agents import AGENT_SIGNATURES

    for agent_id, sig in AGENT_SIGNATURES.items():
        cli.main(["keygen", "--agent-id", agent_id, "--out", str(tmp_path)])
        agent = tmp_path / f"{agent_id}.json"
        agent.write_text(json.dumps({
            "client_id": client_id, "authorization_grant": "g1", "agent_id": agent_id,
            "agent_signature": sig.to_dict(), "pop_public_key_file": f"{agent_id}.public.jwk.json", "version": "1.0.0",
        }))
        assert cli.main(["register", "agent", str(agent), "--idp-url", IDP_URL], http=http) == cli.EXIT_OK
    assert "agent_checksum: sha256:" in capsys.readouterr().out
    assert cli.main(["register", "agent", str(agent), "--idp-url", IDP_URL], http=http) == cli.EXIT_ERROR
    assert "duplicate_checksum" in capsys.readouterr().err

    wf = tmp_path / "wf.json"
    wf.write_text(json.dumps({"client_id": client_id, "authorization_grant": "g1", "definition": workflow_definition()}))
    assert cli.main(["register", "workflow", str(wf), "--idp-url", IDP_URL], http=http) == cli.EXIT_OK
    assert "version: 1" in capsys.readouterr().out

    cyclic = workflow_definition()
    cyclic["workflow_id"] = "cyclic"
    cyclic["edges"].append(["apply_patch", "fetch_manifests"])
    wf.write_text(json.dumps({"client_id": client_id, "authorization_grant": "g1", "definition": cyclic}))
    assert cli.main(["register", "workflow", str(wf), "--idp-url", IDP_URL], http=http) == cli.EXIT_ERROR
    assert "cycle_detected" in capsys.readouterr().err

    wf.write_text(json.dumps({"client_id": client_id, "authorization_grant": "nope", "definition": workflow_definition()}))
    assert cli.main(["register", "workflow", str(wf), "--idp-url", IDP_URL], http=http) == cli.EXIT_ERROR
    assert "invalid_grant" in capsys.readouterr().err


def test_inspect_intent_and_legacy_tokens(tmp_path, capsys, issuer):
    env = build_env("after", seed=0, issuer_key=issuer)
    try:
        env.run_plan(env.new_tracker(), 1)
        sent = env.captured[-1].headers["authorization"].split()[1]
        legacy = env.legacy.access_token()
    finally:
        env.close()
    jwks = tmp_path / "jwks.json"
    jwks.write_text(json.dumps(jwks_document([issuer])))
    common = ["--jwks", str(jwks), "--issuer", ISSUER, "--audience", AUDIENCE, "--now", str(START_TIME + 1)]

    assert cli.main(["inspect", sent, *common]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "executed_by" in out and CANNED_PLAN[0][0] in out and "cnf.jkt" in out

    assert cli.main(["inspect", legacy, *common]) == cli.EXIT_OK
    assert "no intent claims (legacy token)" in capsys.readouterr().out

    head, payload, sig = sent.split(".")
    tampered = ".".join([head, payload[:-2] + ("A" if payload[-2] != "A" else "B") + payload[-1], sig])
    assert cli.main(["inspect", tampered, *common]) == cli.EXIT_ERROR
    assert "verification failed:" in capsys.readouterr().err

    late = common[:-1] + [str(START_TIME + 10_000)]
    assert cli.main(["inspect", sent, *late]) == cli.EXIT_ERROR
    assert "verification failed: expired" in capsys.readouterr().err


def test_threats_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert cli.main(["threats", "--phase", "after", "--threat", "T6", "--threat", "T10", "--out", str(out)]) == cli.EXIT_OK
    assert json.loads(out.read_text())["blocked"] == ["T6", "T10"]
    assert "blocked=2/2" in capsys.readouterr().out
    with pytest.raises(SystemExit) as exc:
        cli.main(["threats", "--threat", "T99"])
    assert exc.value.code == 2


def test_demo_runs(capsys):
    assert cli.main(["demo", "--seed", "1"]) == cli.EXIT_OK
    out = capsys.readouterr().out
    assert "delegation chain: supervisor -> planner -> classifier -> planner -> patcher" in out
    assert "log valid: True" in out


def test_missing_manifest_is_an_operational_error(tmp_path, capsys):
    assert cli.main(["register", "client", str(tmp_path / "absent.json")]) == cli.EXIT_ERROR
    assert "cannot read" in capsys.readouterr().err
