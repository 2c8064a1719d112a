"""Learning planners: a deterministic mock and an HTTP chat-completions client.

A planner turns a task (plus history and optional feedback) into a learning
plan: subproblems, ranked candidate model families, data requirements, an
execute/observe strategy, update criteria, and optionally a direct action
sequence. The mock is the benchmark workhorse; the HTTP client drives the
same interface against a live chat-completions endpoint.
"""

from __future__ import annotations

import json
import logging
import os
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol

from .errors import PlannerError, PlanningFailedError, SchemaError
from .tasks import DEFAULT_ACTIONS, TaskDescriptor, signature_of

logger = logging.getLogger(__name__)

MODEL_FAMILIES = ("sequence", "visual", "multimodal", "hybrid")
STRATEGY_KINDS = ("execute", "observe")

DEFAULT_VALIDATION_THRESHOLD = 0.5
DEFAULT_MAX_EPISODES = 3

# Default latency of the mock planner; calibrated so simulated planner time
# matches the reference benchmark profile. Configurable per instance.
DEFAULT_MOCK_LATENCY_S = 1.4565
DEFAULT_P_CORRUPT = 0.05

API_KEY_ENV = "REUSELOOP_API_KEY"


@dataclass(frozen=True)
class CandidateModel:
    family: str
    rationale: str = ""

    def __post_init__(self):
        if self.family not in MODEL_FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}")


@dataclass(frozen=True)
class DataRequirement:
    channel: str
    min_samples: int = 1

    def __post_init__(self):
        if self.min_samples < 0:
            raise ValueError("min_samples must be nonnegative")


@dataclass(frozen=True)
class StrategyStep:
    kind: str
    detail: str

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")


@dataclass(frozen=True)
class UpdateCriteria:
    validation_threshold: float = DEFAULT_VALIDATION_THRESHOLD
    max_episodes: int = DEFAULT_MAX_EPISODES

    def __post_init__(self):
        if not 0.0 <= self.validation_threshold <= 1.0:
            raise ValueError("validation_threshold must lie in [0, 1]")
        if self.max_episodes < 1:
            raise ValueError("max_episodes must be >= 1")


@dataclass(frozen=True)
class LearningPlan:
    candidate_models: tuple[CandidateModel, ...]
    subproblems: tuple[str, ...] = ()
    data_requirements: tuple[DataRequirement, ...] = ()
    strategy: tuple[StrategyStep, ...] = ()
    update_criteria: UpdateCriteria = UpdateCriteria()
    direct_solution: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.candidate_models:
            raise ValueError("candidate_models must be non-empty")
        if self.direct_solution is not None and not self.direct_solution:
            raise ValueError("direct_solution must be non-empty when present")


@dataclass(frozen=True)
class EpisodeOutcome:
    success: bool
    failed_step: int | None = None


@dataclass
class PlannerFeedback:
    episode_outcomes: list[EpisodeOutcome] = field(default_factory=list)
    notes: str = ""


@dataclass
class PlannerHistory:
    """Bounded record of recent task signatures and method performance."""

    recent_tasks: list[str] = field(default_factory=list)
    recent_methods: list[dict] = field(default_factory=list)
    max_entries: int = 50

    def record_task(self, signature: str) -> None:
        self.recent_tasks.append(signature)
        del self.recent_tasks[: -self.max_entries]

    def record_method(self, method_id: str, success_ratio: float) -> None:
        self.recent_methods.append({"id": method_id, "success_ratio": round(success_ratio, 4)})
        del self.recent_methods[: -self.max_entries]


@dataclass(frozen=True)
class PlannerCall:
    latency_s: float
    plan: LearningPlan
    raw: str | None = None

    def __post_init__(self):
        if self.latency_s < 0:
            raise ValueError("latency_s must be nonnegative")


class Planner(Protocol):
    """The planning interface both implementations satisfy."""

    def plan(
        self,
        task: TaskDescriptor,
        history: PlannerHistory | None = None,
        feedback: PlannerFeedback | None = None,
    ) -> PlannerCall: ...

    def replan(
        self,
        task: TaskDescriptor,
        history: PlannerHistory | None,
        feedback: PlannerFeedback,
    ) -> PlannerCall: ...


# ---------------------------------------------------------------------------
# Plan document schema
# ---------------------------------------------------------------------------

PLAN_SCHEMA_DOC = {
    "candidate_models": [{"family": "sequence|visual|multimodal|hybrid", "rationale": "str"}],
    "subproblems": ["str"],
    "data_requirements": [{"channel": "str", "min_samples": "int >= 0"}],
    "strategy": [{"kind": "execute|observe", "detail": "str"}],
    "update_criteria": {"validation_threshold": "float in [0,1]", "max_episodes": "int >= 1"},
    "direct_solution": ["action-id"],
}


def plan_to_dict(plan: LearningPlan) -> dict:
    return {
        "candidate_models": [
            {"family": m.family, "rationale": m.rationale} for m in plan.candidate_models
        ],
        "subproblems": list(plan.subproblems),
        "data_requirements": [
            {"channel": d.channel, "min_samples": d.min_samples} for d in plan.data_requirements
        ],
        "strategy": [{"kind": s.kind, "detail": s.detail} for s in plan.strategy],
        "update_criteria": {
            "validation_threshold": plan.update_criteria.validation_threshold,
            "max_episodes": plan.update_criteria.max_episodes,
        },
        "direct_solution": list(plan.direct_solution) if plan.direct_solution else None,
    }


def _check_str_list(value: Any, where: str) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise SchemaError(where, "expected a list of strings")
    return tuple(value)


def plan_from_dict(doc: Any) -> LearningPlan:
    """Validate a plan document and fill defaults for the optional parts."""
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "expected a JSON object")

    if "candidate_models" not in doc:
        raise SchemaError("candidate_models", "missing field")
    raw_models = doc["candidate_models"]
    if not isinstance(raw_models, list) or not raw_models:
        raise SchemaError("candidate_models", "expected a non-empty list")
    models = []
    for i, entry in enumerate(raw_models):
        where = f"candidate_models[{i}]"
        if not isinstance(entry, dict) or "family" not in entry:
            raise SchemaError(where, "expected an object with a 'family' field")
        try:
            models.append(CandidateModel(entry["family"], entry.get("rationale", "")))
        except ValueError as exc:
            raise SchemaError(f"{where}.family", str(exc)) from exc

    subproblems = _check_str_list(doc.get("subproblems", []), "subproblems")

    requirements = []
    raw_reqs = doc.get("data_requirements", [])
    if not isinstance(raw_reqs, list):
        raise SchemaError("data_requirements", "expected a list")
    for i, entry in enumerate(raw_reqs):
        where = f"data_requirements[{i}]"
        if not isinstance(entry, dict) or "channel" not in entry:
            raise SchemaError(where, "expected an object with a 'channel' field")
        min_samples = entry.get("min_samples", 1)
        if not isinstance(min_samples, int) or isinstance(min_samples, bool):
            raise SchemaError(f"{where}.min_samples", "expected an integer")
        try:
            requirements.append(DataRequirement(entry["channel"], min_samples))
        except ValueError as exc:
            raise SchemaError(f"{where}.min_samples", str(exc)) from exc

    strategy = []
    raw_strategy = doc.get("strategy", [])
    if not isinstance(raw_strategy, list):
        raise SchemaError("strategy", "expected a list")
    for i, entry in enumerate(raw_strategy):
        where = f"strategy[{i}]"
        if not isinstance(entry, dict) or "kind" not in entry:
            raise SchemaError(where, "expected an object with a 'kind' field")
        try:
            strategy.append(StrategyStep(entry["kind"], entry.get("detail", "")))
        except ValueError as exc:
            raise SchemaError(f"{where}.kind", str(exc)) from exc

    raw_criteria = doc.get("update_criteria", {})
    if not isinstance(raw_criteria, dict):
        raise SchemaError("update_criteria", "expected an object")
    threshold = raw_criteria.get("validation_threshold", DEFAULT_VALIDATION_THRESHOLD)
    max_episodes = raw_criteria.get("max_episodes", DEFAULT_MAX_EPISODES)
    if not isinstance(threshold, (int, float)) or isinstance(threshold, bool):
        raise SchemaError("update_criteria.validation_threshold", "expected a number")
    if not isinstance(max_episodes, int) or isinstance(max_episodes, bool):
        raise SchemaError("update_criteria.max_episodes", "expected an integer")
    try:
        criteria = UpdateCriteria(float(threshold), max_episodes)
    except ValueError as exc:
        raise SchemaError("update_criteria", str(exc)) from exc

    solution = doc.get("direct_solution")
    direct = None
    if solution is not None:
        direct = _check_str_list(solution, "direct_solution")
        if not direct:
            raise SchemaError("direct_solution", "must be non-empty when present")

    return LearningPlan(
        candidate_models=tuple(models),
        subproblems=subproblems,
        data_requirements=tuple(requirements),
        strategy=tuple(strategy),
        update_criteria=criteria,
        direct_solution=direct,
    )


def parse_plan(text: str) -> LearningPlan:
    """Parse and validate plan text (a JSON document)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"not valid JSON: {exc}") from exc
    return plan_from_dict(doc)


# ---------------------------------------------------------------------------
# Mock planner
# ---------------------------------------------------------------------------


class MockPlanner:
    """Deterministic stand-in for the LLM.

    Output is a pure function of (task signature, seed, call index): two
    planners built with the same seed and called in the same order produce
    identical calls. The direct solution equals the task's hidden target
    sequence, except that with probability ``p_corrupt`` one step is replaced
    by a different action from the vocabulary.

    ``replan`` applies a documented transformation: for every failed step in
    the feedback it inserts an ``observe`` directive immediately before that
    step's ``execute`` directive; after an all-success episode the plan is
    returned unchanged (a fixed point).
    """

    def __init__(
        self,
        seed: int = 0,
        latency_s: float = DEFAULT_MOCK_LATENCY_S,
        p_corrupt: float = DEFAULT_P_CORRUPT,
        vocab: tuple[str, ...] = DEFAULT_ACTIONS,
    ):
        if latency_s < 0:
            raise ValueError("latency_s must be nonnegative")
        if not 0.0 <= p_corrupt <= 1.0:
            raise ValueError("p_corrupt must lie in [0, 1]")
        self.seed = seed
        self.latency_s = latency_s
        self.p_corrupt = p_corrupt
        self.vocab = tuple(vocab)
        self._calls = 0

    @property
    def calls_made(self) -> int:
        return self._calls

    def plan(
        self,
        task: TaskDescriptor,
        history: PlannerHistory | None = None,
        feedback: PlannerFeedback | None = None,
    ) -> PlannerCall:
        call_index = self._calls
        self._calls += 1
        solution = self._solution_for(task, call_index)
        plan = LearningPlan(
            candidate_models=(
                CandidateModel("sequence", "goal decomposes into an ordered action chain"),
                CandidateModel("hybrid", "fallback when pure sequence features underfit"),
            ),
            subproblems=(
                f"ground goal '{' '.join(task.goal)}' to actuator primitives",
                "order primitives into an executable chain",
                "define a per-step success check",
            ),
            data_requirements=tuple(
                DataRequirement(channel=ch, min_samples=1) for ch in task.observations
            ),
            strategy=tuple(StrategyStep("execute", action) for action in solution),
            update_criteria=UpdateCriteria(),
            direct_solution=tuple(solution),
        )
        if feedback is not None and feedback.episode_outcomes:
            plan = self._weave_feedback(plan, feedback)
        return PlannerCall(latency_s=self.latency_s, plan=plan)

    def replan(
        self,
        task: TaskDescriptor,
        history: PlannerHistory | None,
        feedback: PlannerFeedback,
    ) -> PlannerCall:
        if feedback is None or not feedback.episode_outcomes:
            raise PlannerError("replan requires feedback with at least one episode outcome")
        return self.plan(task, history, feedback)

    def _solution_for(self, task: TaskDescriptor, call_index: int) -> list[str]:
        rng = random.Random(f"{self.seed}:{signature_of(task)}:{call_index}")
        solution = list(task.target_sequence)
        if rng.random() < self.p_corrupt:
            idx = rng.randrange(len(solution))
            alternatives = [a for a in self.vocab if a != solution[idx]]
            if alternatives:
                solution[idx] = rng.choice(alternatives)
        return solution

    @staticmethod
    def _weave_feedback(plan: LearningPlan, feedback: PlannerFeedback) -> LearningPlan:
        failed = sorted(
            {
                o.failed_step
                for o in feedback.episode_outcomes
                if not o.success and o.failed_step is not None
            }
        )
        if not failed:
            return plan
        strategy: list[StrategyStep] = []
        for step_no, directive in enumerate(plan.strategy, start=1):
            if step_no in failed:
                strategy.append(
                    StrategyStep("observe", f"inspect preconditions before step {step_no}")
                )
            strategy.append(directive)
        return LearningPlan(
            candidate_models=plan.candidate_models,
            subproblems=plan.subproblems,
            data_requirements=plan.data_requirements,
            strategy=tuple(strategy),
            update_criteria=plan.update_criteria,
            direct_solution=plan.direct_solution,
        )


# ---------------------------------------------------------------------------
# HTTP planner
# ---------------------------------------------------------------------------


class HttpPlanner:
    """Chat-completions client for live planning.

    Sends ``{"model", "messages", "temperature"}`` to the configured
    endpoint; the first message embeds the plan schema, the task descriptor,
    and recent history. The response's message content is parsed as a plan
    document. Schema violations and transport errors are retried up to
    ``retries`` times before raising ``PlanningFailedError``.

    Authentication: if the environment variable named by ``api_key_env``
    (default ``REUSELOOP_API_KEY``) is set, its value is sent as a bearer
    token. The value itself is never logged or written to transcripts.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        temperature: float = 0.0,
        timeout_s: float = 30.0,
        retries: int = 2,
        api_key_env: str = API_KEY_ENV,
        transcript_path: str | Path | None = None,
    ):
        if not endpoint:
            raise ValueError("endpoint must be non-empty")
        if not model:
            raise ValueError("model must be non-empty")
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.timeout_s = timeout_s
        self.retries = retries
        self.api_key_env = api_key_env
        self.transcript_path = Path(transcript_path) if transcript_path else None
        # Calls that exhausted their retry budget; callers that swallow
        # PlanningFailedError per episode can still see failures happened.
        self.failed_calls = 0

    def plan(
        self,
        task: TaskDescriptor,
        history: PlannerHistory | None = None,
        feedback: PlannerFeedback | None = None,
    ) -> PlannerCall:
        messages = [{"role": "system", "content": self._prompt(task, history, feedback)}]
        if feedback is not None and feedback.episode_outcomes:
            messages.append(
                {
                    "role": "user",
                    "content": "Revise the plan using the execution feedback above. "
                    "Return only the JSON document.",
                }
            )
        else:
            messages.append(
                {"role": "user", "content": "Return only the learning-plan JSON document."}
            )
        return self._call(messages)

    def replan(
        self,
        task: TaskDescriptor,
        history: PlannerHistory | None,
        feedback: PlannerFeedback,
    ) -> PlannerCall:
        if feedback is None or not feedback.episode_outcomes:
            raise PlannerError("replan requires feedback with at least one episode outcome")
        return self.plan(task, history, feedback)

    def _call(self, messages: list[dict]) -> PlannerCall:
        import requests

        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"

        latency = 0.0
        last_error: Exception | None = None
        attempts = self.retries + 1
        for attempt in range(attempts):
            body = {"model": self.model, "messages": messages, "temperature": self.temperature}
            started = time.monotonic()
            try:
                response = requests.post(
                    self.endpoint, json=body, headers=headers, timeout=self.timeout_s
                )
                response.raise_for_status()
                text = response.json()["choices"][0]["message"]["content"]
            except Exception as exc:  # transport or envelope failure
                latency += time.monotonic() - started
                last_error = exc
                logger.warning("planner request failed (attempt %d): %s", attempt + 1, exc)
                self._transcribe(attempt, messages, error=str(exc))
                continue

            latency += time.monotonic() - started
            self._transcribe(attempt, messages, response_text=text)
            try:
                plan = parse_plan(text)
            except SchemaError as exc:
                last_error = exc
                logger.warning("planner returned invalid plan (attempt %d): %s", attempt + 1, exc)
                messages = messages + [
                    {"role": "assistant", "content": text},
                    {
                        "role": "user",
                        "content": f"That document failed validation ({exc}). "
                        "Return only a corrected JSON document.",
                    },
                ]
                continue
            return PlannerCall(latency_s=latency, plan=plan, raw=text)

        self.failed_calls += 1
        raise PlanningFailedError(
            f"no schema-valid plan after {attempts} attempts: {last_error}"
        )

    def _prompt(
        self,
        task: TaskDescriptor,
        history: PlannerHistory | None,
        feedback: PlannerFeedback | None,
    ) -> str:
        payload = {
            "plan_schema": PLAN_SCHEMA_DOC,
            "task": {
                "instruction": task.instruction,
                "goal": list(task.goal),
                "observations": list(task.observations),
                "max_steps": task.constraints.max_steps,
            },
            "history": {
                "recent_tasks": history.recent_tasks if history else [],
                "recent_methods": history.recent_methods if history else [],
            },
        }
        if feedback is not None:
            payload["feedback"] = {
                "episode_outcomes": [
                    {"success": o.success, "failed_step": o.failed_step}
                    for o in feedback.episode_outcomes
                ],
                "notes": feedback.notes,
            }
        return (
            "You are the learning organizer for a robot that consolidates task "
            "solutions into a local method library. Produce a learning plan as a "
            "single JSON document matching plan_schema.\n" + json.dumps(payload, indent=2)
        )

    def _transcribe(
        self,
        attempt: int,
        messages: list[dict],
        response_text: str | None = None,
        error: str | None = None,
    ) -> None:
        if self.transcript_path is None:
            return
        entry = {
            "attempt": attempt,
            "endpoint": self.endpoint,
            "model": self.model,
            "messages": messages,
            "response": response_text,
            "error": error,
        }
        with self.transcript_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")
