"""Running scenarios, summarising them, and writing machine-readable results."""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

from ajwt import reasons
from ajwt.core.tokens import IssuerKey, generate_issuer_key
from ajwt.harness.env import PHASES, build_env
from ajwt.harness.scenarios import ALLOWED, SCENARIOS, SCENARIOS_BY_ID, ThreatScenario

logger = logging.getLogger(__name__)

# the threats a bearer-token deployment must be shown to be open to
TOKEN_LAYER_THREATS = ("T1", "T2", "T4", "T5", "T7", "T8", "T9", "T11")


@dataclass
class AttemptResult:
    label: str
    expected: str
    observed: str

    @property
    def met(self) -> bool:
        return self.expected == self.observed


@dataclass
class ScenarioResult:
    threat_id: str
    name: str
    phase: str
    attempts: list[AttemptResult]
    evidence: dict[str, Any] = field(default_factory=dict)
    error: Optional[str] = None

    @property
    def outcome(self) -> str:
        """``succeeded`` if any attack attempt got through, else ``blocked``."""
        if self.error is not None:
            return "error"
        return "succeeded" if any(a.observed == ALLOWED for a in self.attempts) else "blocked"

    @property
    def met(self) -> bool:
        return self.error is None and bool(self.attempts) and all(a.met for a in self.attempts)

    @property
    def unrecognised_codes(self) -> list[str]:
        return [a.observed for a in self.attempts if a.observed != ALLOWED and a.observed not in reasons.ALL_CODES]

    def to_dict(self) -> dict[str, Any]:
        return {
            "threat_id": self.threat_id,
            "name": self.name,
            "phase": self.phase,
            "outcome": self.outcome,
            "expectation_met": self.met,
            "attempts": [asdict(a) | {"met": a.met} for a in self.attempts],
            "error": self.error,
            "evidence": self.evidence,
        }


@dataclass
class RunSummary:
    phase: str
    seed: int
    results: list[ScenarioResult]
    elapsed_s: float

    @property
    def blocked(self) -> list[str]:
        return [r.threat_id for r in self.results if r.outcome == "blocked"]

    @property
    def succeeded(self) -> list[str]:
        return [r.threat_id for r in self.results if r.outcome == "succeeded"]

    @property
    def all_met(self) -> bool:
        return all(r.met for r in self.results)

    def to_dict(self) -> dict[str, Any]:
        return {
            "phase": self.phase,
            "seed": self.seed,
            "elapsed_s": round(self.elapsed_s, 3),
            "blocked": self.blocked,
            "succeeded": self.succeeded,
            "all_expectations_met": self.all_met,
            "scenarios": [r.to_dict() for r in self.results],
        }

    def table(self) -> str:
        rows = [f"{'threat':<6} {'name':<34} {'outcome':<10} {'expected':<8} codes"]
        for r in self.results:
            codes = ", ".join(a.observed for a in r.attempts) if r.error is None else r.error
            rows.append(f"{r.threat_id:<6} {r.name:<34} {r.outcome:<10} {'yes' if r.met else 'NO':<8} {codes}")
        rows.append(
            f"phase={self.phase} blocked={len(self.blocked)}/{len(self.results)} "
            f"succeeded={len(self.succeeded)}/{len(self.results)} elapsed={self.elapsed_s:.2f}s"
        )
        return "\n".join(rows)


def run_scenario(
    scenario: ThreatScenario, phase: str, seed: int = 0, issuer_key: Optional[IssuerKey] = None
) -> ScenarioResult:
    """Run one scenario in a fresh deployment."""
    env = build_env(phase, seed, issuer_key)
    try:
        observed = scenario.attack(env)
        expected = scenario.expected(phase)
        attempts = [AttemptResult(label, exp, obs) for (label, obs), exp in zip(observed, expected)]
        error = None
        if len(observed) != len(expected):
            error = f"expected {len(expected)} attempts, observed {len(observed)}"
        return ScenarioResult(scenario.threat_id, scenario.name, phase, attempts, env.evidence(), error)
    except Exception as exc:  # a broken scenario must show up in the report, not abort the run
        logger.exception("scenario %s failed to run", scenario.threat_id)
        return ScenarioResult(scenario.threat_id, scenario.name, phase, [], env.evidence(), f"{type(exc).__name__}: {exc}")
    finally:
        env.close()


def select(threats: Optional[Iterable[str]] = None) -> list[ThreatScenario]:
    if threats is None:
        return list(SCENARIOS)
    chosen = []
    for t in threats:
        key = t.upper()
        if key not in SCENARIOS_BY_ID:
            raise KeyError(f"unknown threat id {t!r}")
        chosen.append(SCENARIOS_BY_ID[key])
    return chosen


def run_all(
    phase: str,
    seed: int = 0,
    threats: Optional[Sequence[str]] = None,
    stress: bool = False,
    issuer_key: Optional[IssuerKey] = None,
) -> RunSummary:
    """Run the selected scenarios, sequentially or (``stress``) all at once on separate threads."""
    if phase not in PHASES:
        raise ValueError(f"phase must be one of {PHASES}")
    scenarios = select(threats)
    key = issuer_key or generate_issuer_key()
    start = time.perf_counter()
    if stress:
        with ThreadPoolExecutor(max_workers=len(scenarios)) as pool:
            results = list(pool.map(lambda s: run_scenario(s, phase, seed, key), scenarios))
    else:
        results = [run_scenario(s, phase, seed, key) for s in scenarios]
    return RunSummary(phase, seed, results, time.perf_counter() - start)


@dataclass
class HarnessConfig:
    phase: str = "after"
    threats: Optional[list[str]] = None
    seed: int = 0
    stress: bool = False
    output: Optional[str] = None

    @classmethod
    def load(cls, path: str | Path) -> "HarnessConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            phase=str(data.get("phase", "after")),
            threats=list(data["threats"]) if data.get("threats") else None,
            seed=int(data.get("seed", 0)),
            stress=bool(data.get("stress", False)),
            output=data.get("output"),
        )


def write_results(summary: RunSummary, path: str | Path) -> None:
    Path(path).write_text(json.dumps(summary.to_dict(), indent=2, sort_keys=True), encoding="utf-8")
