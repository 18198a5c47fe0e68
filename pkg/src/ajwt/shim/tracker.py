"""Per-execution workflow state as seen by the shim."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class WorkflowTracker:
    """State of one workflow execution. Not shared between executions.

    ``executed_steps`` includes the step currently running; ``delegation_chain``
    starts with the initiating agent and only ever grows.
    """

    workflow_id: str
    initiator: str
    executed_steps: list[str] = field(default_factory=list)
    delegation_chain: list[str] = field(default_factory=list)
    current_agent: str = ""

    def __post_init__(self) -> None:
        if not self.delegation_chain:
            self.delegation_chain = [self.initiator]
        if not self.current_agent:
            self.current_agent = self.delegation_chain[-1]

    @property
    def current_step(self) -> str | None:
        return self.executed_steps[-1] if self.executed_steps else None

    @property
    def prior_steps(self) -> list[str]:
        return self.executed_steps[:-1]


def track_step(tracker: WorkflowTracker, step_id: str, executing_agent: str) -> WorkflowTracker:
    """Record that ``executing_agent`` is about to run ``step_id``."""
    tracker.executed_steps.append(step_id)
    if tracker.delegation_chain[-1] != executing_agent:
        tracker.delegation_chain.append(executing_agent)
    tracker.current_agent = executing_agent
    return tracker
