import json

import pytest

from ajwt import reasons as r
from ajwt.harness import SCENARIOS, build_env, run_all, run_scenario, write_results
from ajwt.harness.env import API_URL
from ajwt.harness.runner import TOKEN_LAYER_THREATS, HarnessConfig, select
from ajwt.harness.scenarios import ThreatScenario

from expected import AFTER_CODES


@pytest.fixture(scope="module")
def issuer():
    from ajwt.core import generate_issuer_key

    return generate_issuer_key()


@pytest.fixture(scope="module")
def after(issuer):
    return run_all("after", seed=0, issuer_key=issuer)


@pytest.fixture(scope="module")
def before(issuer):
    return run_all("before", seed=0, issuer_key=issuer)


def test_every_threat_is_blocked_with_expected_codes(after):
    assert after.blocked == list(AFTER_CODES)
    for result in after.results:
        assert [a.observed for a in result.attempts] == AFTER_CODES[result.threat_id], result.threat_id
        assert result.met and not result.unrecognised_codes
        assert result.evidence["idp_log_valid"] and result.evidence["rs_log_valid"]


def test_bearer_deployment_is_open_to_token_layer_threats(before):
    assert set(TOKEN_LAYER_THREATS) <= set(before.succeeded)
    assert before.all_met
    t12 = next(res for res in before.results if res.threat_id == "T12")
    assert t12.outcome == "blocked"


def test_same_seed_gives_identical_results(issuer):
    a = run_all("after", seed=11, threats=["T2", "T11"], issuer_key=issuer).to_dict()
    b = run_all("after", seed=11, threats=["T2", "T11"], issuer_key=issuer).to_dict()
    a.pop("elapsed_s"), b.pop("elapsed_s")
    assert a == b


def test_stress_mode_runs_scenarios_concurrently_with_same_outcomes(issuer):
    summary = run_all("after", seed=0, stress=True, issuer_key=issuer)
    assert summary.all_met and len(summary.blocked) == 12


def test_phases_are_isolated(issuer):
    env = build_env("after", seed=0, issuer_key=issuer)
    try:
        token = env.legacy.access_token()
        resp = env.http.get(API_URL + "/repo/manifests", headers={"Authorization": f"Bearer {token}"})
        assert resp.status_code == 403 and resp.json()["reason"] == r.INTENT_MISSING
        resp = env.http.get(API_URL + "/health", headers={"Authorization": f"Bearer {token}"})
        assert resp.status_code == 200
    finally:
        env.close()


def test_legitimate_workflow_runs_end_to_end(issuer):
    env = build_env("after", seed=0, issuer_key=issuer)
    try:
        tracker = env.new_tracker()
        responses = env.run_plan(tracker, 4)
        assert [resp.json()["caller"]["executed_by"] for resp in responses] == ["planner", "classifier", "planner", "patcher"]
        assert tracker.delegation_chain == ["supervisor", "planner", "classifier", "planner", "patcher"]
        outcomes = [e.body["outcome"] for e in env.idp.store.log]
        assert outcomes == ["issued"] * 4
    finally:
        env.close()


def test_broken_scenario_is_reported_not_raised(issuer):
    def explode(env):
        raise RuntimeError("boom")

    scenario = ThreatScenario("TX", "broken", "Test", "raises", explode, (r.MALFORMED_TOKEN,), (r.MALFORMED_TOKEN,))
    result = run_scenario(scenario, "after", issuer_key=issuer)
    assert result.outcome == "error" and not result.met
    assert "boom" in result.error


def test_unknown_threat_id_is_rejected():
    with pytest.raises(KeyError):
        select(["T13"])
    with pytest.raises(ValueError):
        run_all("during")


def test_results_file_and_config(tmp_path, issuer):
    summary = run_all("after", threats=["t6"], issuer_key=issuer)
    out = tmp_path / "results.json"
    write_results(summary, out)
    data = json.loads(out.read_text())
    assert data["blocked"] == ["T6"] and data["all_expectations_met"]
    assert data["scenarios"][0]["attempts"][0]["observed"] == r.INVALID_GRANT
    cfg = tmp_path / "harness.json"
    cfg.write_text('{"phase": "before", "threats": ["T1"], "seed": 4, "stress": true}')
    loaded = HarnessConfig.load(cfg)
    assert (loaded.phase, loaded.threats, loaded.seed, loaded.stress) == ("before", ["T1"], 4, True)


def test_scenario_catalogue_is_complete():
    assert [s.threat_id for s in SCENARIOS] == [f"T{i}" for i in range(1, 13)]
