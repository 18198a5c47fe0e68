import pytest

from ajwt.core import AgentProof, IntentClaims, TokenClaims, generate_issuer_key

ISSUER = "https://idp.example.com"
AUDIENCE = "api.github.com"


@pytest.fixture(scope="session")
def issuer_key():
    return generate_issuer_key("idp_key_2024")


@pytest.fixture(scope="session")
def other_issuer_key():
    return generate_issuer_key("idp_key_2024")


@pytest.fixture
def sample_intent_claims():
    """The reference intent token used throughout the token tests."""
    return TokenClaims(
        iss=ISSUER,
        sub="vulnerability_scanner_v2.1",
        aud=AUDIENCE,
        exp=1719571200,
        iat=1719570900,
        jti="token_a7b9c2d4",
        scope="read:code write:report",
        intent=IntentClaims(
            workflow_id="vulnerability_assessment_v2",
            workflow_step="code_analysis",
            executed_by="static_analyzer",
            initiated_by="orchestrator",
            delegation_chain=["orchestrator", "static_analyzer"],
            step_sequence_hash="sha256:1a2b3c4d",
            execution_context={"repository": "example/project", "branch": "main", "commit": "abc123"},
        ),
        agent_proof=AgentProof(
            agent_checksum="sha256:a7b9c2d4e5f6...",
            registration_id="reg_1719570000",
            version="2.1.0",
        ),
    )


@pytest.fixture
def sample_access_claims():
    return TokenClaims(
        iss=ISSUER,
        sub="vulnerability_scanner_v2.1",
        aud=AUDIENCE,
        exp=1719571200,
        iat=1719570900,
        jti="token_a7b9c2d4",
        scope="read:code write:report",
    )


# -- acceptance reporting -------------------------------------------------------------

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (rep.when != "call" and not rep.failed):
        return
    number, title = marker.args
    ACCEPTANCE[number] = (title, rep.passed, getattr(item, "acceptance_detail", ""))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {title}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
