"""Threat-scenario harness: a scripted four-agent client, mock APIs, twelve attacks in two phases."""

from ajwt.harness.env import FakeClock, HarnessEnv, build_env
from ajwt.harness.runner import HarnessConfig, RunSummary, ScenarioResult, run_all, run_scenario, write_results
from ajwt.harness.scenarios import ALLOWED, SCENARIOS, SCENARIOS_BY_ID, ThreatScenario

__all__ = [
    "ALLOWED",
    "SCENARIOS",
    "SCENARIOS_BY_ID",
    "FakeClock",
    "HarnessConfig",
    "HarnessEnv",
    "RunSummary",
    "ScenarioResult",
    "ThreatScenario",
    "build_env",
    "run_all",
    "run_scenario",
    "write_results",
]
