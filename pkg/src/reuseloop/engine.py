"""Closed-loop episode engine over a virtual clock.

``run_episode`` handles one task event under a policy mode; ``run_loop``
folds it over an event stream, threading the method library so that what one
episode learns the next can reuse. All durations come from the virtual
clock: configured phase costs plus the planner's reported latency, which
makes benchmark runs exactly reproducible.

Policy modes
------------
always_llm
    Plan every task with the LLM and execute the returned solution; nothing
    is ever consolidated. Retrieval is skipped (and charged nothing).
library_only
    Retrieve and execute on coverage; uncovered tasks fail with no plan call.
proposed
    Full loop: retrieve, trigger, reuse on coverage, otherwise plan, collect
    self-execution experience, adjust, consolidate, validate, store, and
    execute the validated method.
observation_only
    Observed events cost ``observe_s`` and are never consolidated; self
    events behave like always_llm.
proposed_observation
    Observed events run the observation trigger and, when uncovered,
    consolidate the observed behavior into a method (one plan call, no
    execution); self events behave like proposed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import learner
from .errors import PlannerError, RecordStreamError
from .experience import EpisodeDataset, ExperienceSample, Outcome, SampleContext, SOURCE_SELF
from .library import MethodLibrary
from .planner import EpisodeOutcome, Planner, PlannerFeedback, PlannerHistory
from .tasks import OBSERVED_EVENT, TaskDescriptor, TaskEvent, signature_of
from .trigger import (
    LEARN_OBSERVATION,
    NO_ACTION,
    REUSE,
    TriggerDecision,
    TriggerThresholds,
    decide,
)

ALWAYS_LLM = "always_llm"
LIBRARY_ONLY = "library_only"
PROPOSED = "proposed"
OBSERVATION_ONLY = "observation_only"
PROPOSED_OBSERVATION = "proposed_observation"
POLICY_MODES = (ALWAYS_LLM, LIBRARY_ONLY, PROPOSED, OBSERVATION_ONLY, PROPOSED_OBSERVATION)

PHASES = ("retrieve", "plan_llm", "execute", "collect", "train", "store")


@dataclass(frozen=True)
class ExecutorConfig:
    """Virtual-clock durations for each episode phase, in seconds."""

    base_s: float = 4.8
    per_step_s: float = 0.35
    retrieve_s: float = 0.01
    collect_s: float = 0.5
    train_s: float = 0.23
    store_s: float = 0.05
    observe_s: float = 0.2

    def __post_init__(self):
        for name in ("base_s", "per_step_s", "retrieve_s", "collect_s",
                     "train_s", "store_s", "observe_s"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def execute_time(self, n_steps: int) -> float:
        return self.base_s + self.per_step_s * n_steps


class VirtualClock:
    """Per-episode simulated time, bucketed by phase."""

    def __init__(self):
        self.phases: dict[str, float] = dict.fromkeys(PHASES, 0.0)

    def add(self, phase: str, seconds: float) -> None:
        if phase not in self.phases:
            raise ValueError(f"unknown phase {phase!r}")
        if seconds < 0:
            raise ValueError("durations must be nonnegative")
        self.phases[phase] += seconds

    @property
    def now_s(self) -> float:
        return sum(self.phases.values())


class SequenceExecutor(learner.Replayer):
    """Simulated environment for one task.

    Execution succeeds when the attempted sequence equals the task's hidden
    target. ``execute`` charges the clock; ``replay`` is the free validation
    check; ``collect`` additionally records one experience sample per step,
    with feedback 1 for a step matching the expected action.
    """

    def __init__(self, task: TaskDescriptor, config: ExecutorConfig):
        self.task = task
        self.config = config

    def matches(self, sequence: list[str]) -> bool:
        return tuple(sequence) == self.task.target_sequence

    def replay(self, sequence: list[str]) -> bool:
        return self.matches(sequence)

    def execute(self, sequence: list[str], clock: VirtualClock) -> bool:
        clock.add("execute", self.config.execute_time(len(sequence)))
        return self.matches(sequence)

    def collect(
        self, sequence: list[str], dataset: EpisodeDataset, clock: VirtualClock
    ) -> list[ExperienceSample]:
        clock.add("collect", self.config.collect_s)
        target = self.task.target_sequence
        samples = []
        for i, action in enumerate(sequence, start=1):
            ok = i <= len(target) and action == target[i - 1]
            sample = ExperienceSample(
                t=i,
                observation={"step": i},
                action=action,
                outcome=Outcome(success=ok, feedback=1.0 if ok else 0.0),
                context=SampleContext(source=SOURCE_SELF, environment=dict(self.task.environment)),
            )
            dataset.record_step(sample)
            samples.append(sample)
        return samples


@dataclass
class RunRecord:
    """One episode's accounting. ``total_s`` always equals the phase sum."""

    policy: str
    task_id: str
    repeat_index: int
    cycle: int
    retrieve_s: float
    plan_llm_s: float
    execute_s: float
    collect_s: float
    train_s: float
    store_s: float
    total_s: float
    llm_calls: int
    llm_time_s: float
    success: bool
    hit: bool
    learned: bool

    def __post_init__(self):
        if self.hit and self.learned:
            raise ValueError("an episode cannot be both a reuse hit and a learning episode")
        if self.llm_time_s > self.total_s + 1e-12:
            raise ValueError("llm_time_s cannot exceed total_s")


def _record(
    event: TaskEvent,
    mode: str,
    clock: VirtualClock,
    repeat_index: int,
    llm_calls: int,
    llm_time_s: float,
    success: bool,
    hit: bool,
    learned: bool,
) -> RunRecord:
    return RunRecord(
        policy=mode,
        task_id=event.task.id,
        repeat_index=repeat_index,
        cycle=event.cycle,
        retrieve_s=clock.phases["retrieve"],
        plan_llm_s=clock.phases["plan_llm"],
        execute_s=clock.phases["execute"],
        collect_s=clock.phases["collect"],
        train_s=clock.phases["train"],
        store_s=clock.phases["store"],
        total_s=clock.now_s,
        llm_calls=llm_calls,
        llm_time_s=llm_time_s,
        success=success,
        hit=hit,
        learned=learned,
    )


class _Episode:
    """Mutable state for one run_episode call."""

    def __init__(
        self,
        event: TaskEvent,
        mode: str,
        library: MethodLibrary,
        planner: Planner,
        thresholds: TriggerThresholds,
        config: ExecutorConfig,
        clock: VirtualClock,
        history: PlannerHistory | None,
    ):
        self.event = event
        self.task = event.task
        self.mode = mode
        self.library = library
        self.planner = planner
        self.thresholds = thresholds
        self.config = config
        self.clock = clock
        self.history = history
        self.executor = SequenceExecutor(event.task, config)
        self.llm_calls = 0
        self.llm_time_s = 0.0
        self.success = False
        self.hit = False
        self.learned = False

    # -- planner access -----------------------------------------------------

    def _plan(self, feedback: PlannerFeedback | None = None):
        if feedback is None:
            call = self.planner.plan(self.task, self.history)
        else:
            call = self.planner.replan(self.task, self.history, feedback)
        self.clock.add("plan_llm", call.latency_s)
        self.llm_calls += 1
        self.llm_time_s += call.latency_s
        return call

    # -- shared paths ---------------------------------------------------------

    def reuse(self, decision: TriggerDecision) -> None:
        method = decision.method
        assert method is not None
        ok = self.executor.execute(list(method.procedure), self.clock)
        self.library.update_reliability(method.id, ok, self.event.cycle)
        self.success = ok
        self.hit = True
        if self.history is not None:
            ratio = self.library.get(method.id).reliability.success_ratio
            self.history.record_method(method.id, ratio)
        if learner.needs_refinement(
            self.library.get(method.id), self.event.cycle, self.thresholds.tau_u
        ):
            self._refine(ok, list(method.procedure))

    def _refine(self, exec_success: bool, attempted: list[str]) -> None:
        # One re-entry per cycle: replan from the execution feedback and run
        # the learning pipeline without a second execution charge.
        failed_step = None
        target = self.task.target_sequence
        for i, action in enumerate(attempted, start=1):
            if i > len(target) or action != target[i - 1]:
                failed_step = i
                break
        feedback = PlannerFeedback(
            episode_outcomes=[EpisodeOutcome(success=exec_success, failed_step=failed_step)],
            notes="stored method utility fell below the refinement threshold",
        )
        try:
            call = self._plan(feedback)
        except PlannerError:
            return
        inserted = self._consolidate_self(call.plan, execute_after=False)
        if inserted:
            self.hit = False

    def learn_from_execution(self) -> None:
        """Plan, collect self-execution experience, consolidate, store, execute."""
        try:
            call = self._plan()
        except PlannerError:
            return
        plan = call.plan
        self._consolidate_self(plan, execute_after=True)

    def _consolidate_self(self, plan, execute_after: bool) -> bool:
        dataset = EpisodeDataset(task_signature=signature_of(self.task))
        if plan.direct_solution is not None:
            self.executor.collect(list(plan.direct_solution), dataset, self.clock)
        try:
            candidate = learner.initialize(plan, dataset)
        except ValueError:
            return False
        for sample in dataset.self_samples:
            if not sample.outcome.success:
                learner.quasi_adjust(candidate, sample)
        self.clock.add("train", self.config.train_s)
        candidate = learner.train_episode(candidate, dataset)
        report = learner.validate(candidate, self.executor, plan.update_criteria)
        if report.passed:
            method = learner.build_method(candidate, self.task, dataset, self.event.cycle)
            self.library.insert(method)
            self.clock.add("store", self.config.store_s)
            self.learned = True
        if execute_after:
            self.success = self.executor.execute(list(candidate.sequence), self.clock)
        return report.passed

    def learn_from_observation(self) -> None:
        """Consolidate an observed behavior: plan, ingest, train, validate, store."""
        observed = self.event.observed
        assert observed is not None
        try:
            call = self._plan()
        except PlannerError:
            return
        plan = call.plan
        dataset = EpisodeDataset(task_signature=observed.task_signature)
        dataset.ingest_observation(observed)
        try:
            candidate = learner.initialize(plan, dataset)
        except ValueError:
            return
        self.clock.add("train", self.config.train_s)
        candidate = learner.train_episode(candidate, dataset)
        report = learner.validate(candidate, self.executor, plan.update_criteria)
        if report.passed:
            method = learner.build_method(candidate, self.task, dataset, self.event.cycle)
            self.library.insert(method)
            self.clock.add("store", self.config.store_s)
            self.learned = True
            self.success = True

    def observe_only(self) -> None:
        observed = self.event.observed
        assert observed is not None
        self.clock.add("collect", self.config.observe_s)
        self.success = observed.success


def run_episode(
    event: TaskEvent,
    mode: str,
    library: MethodLibrary,
    planner: Planner,
    thresholds: TriggerThresholds,
    executor_config: ExecutorConfig,
    clock: VirtualClock | None = None,
    *,
    repeat_index: int = 1,
    history: PlannerHistory | None = None,
) -> RunRecord:
    """Run one task event under ``mode`` and return its run record.

    Planner failures are not raised; they mark the episode unsuccessful.
    """
    if mode not in POLICY_MODES:
        raise ValueError(f"unknown policy mode {mode!r}")
    clock = clock if clock is not None else VirtualClock()
    ep = _Episode(event, mode, library, planner, thresholds, executor_config, clock, history)

    if event.kind == OBSERVED_EVENT:
        _run_observed(ep)
    else:
        _run_self(ep)

    return _record(
        event, mode, clock, repeat_index,
        ep.llm_calls, ep.llm_time_s, ep.success, ep.hit, ep.learned,
    )


def _run_self(ep: _Episode) -> None:
    cfg, clock, task = ep.config, ep.clock, ep.task

    if ep.mode in (ALWAYS_LLM, OBSERVATION_ONLY):
        # Plan-and-execute baseline; no retrieval cost, no consolidation.
        try:
            call = ep._plan()
        except PlannerError:
            return
        solution = call.plan.direct_solution
        if solution is None:
            return
        ep.success = ep.executor.execute(list(solution), clock)
        return

    clock.add("retrieve", cfg.retrieve_s)
    retrieval = ep.library.retrieve_best(task, ep.thresholds.tau_r)

    if ep.mode == LIBRARY_ONLY:
        if retrieval.covered and retrieval.method is not None:
            ep.success = ep.executor.execute(list(retrieval.method.procedure), clock)
            ep.library.update_reliability(retrieval.method.id, ep.success, ep.event.cycle)
            ep.hit = True
        return

    # proposed / proposed_observation
    decision = decide(task, retrieval, None, None, ep.thresholds)
    if decision.branch == REUSE:
        ep.reuse(decision)
    else:
        ep.learn_from_execution()


def _run_observed(ep: _Episode) -> None:
    if ep.mode != PROPOSED_OBSERVATION:
        # Only proposed_observation consolidates observations.
        ep.observe_only()
        return

    cfg, clock = ep.config, ep.clock
    observed = ep.event.observed
    assert observed is not None
    clock.add("collect", cfg.observe_s)
    clock.add("retrieve", cfg.retrieve_s)
    obs_retrieval = ep.library.retrieve_best(ep.task, ep.thresholds.tau_o)
    decision = decide(None, None, observed, obs_retrieval, ep.thresholds)
    if decision.branch == LEARN_OBSERVATION:
        ep.learn_from_observation()
    else:
        assert decision.branch == NO_ACTION
        ep.success = observed.success


def run_loop(
    events: list[TaskEvent],
    mode: str,
    library: MethodLibrary,
    planner: Planner,
    thresholds: TriggerThresholds,
    executor_config: ExecutorConfig,
) -> list[RunRecord]:
    """Fold ``run_episode`` over an ordered event stream.

    The library is threaded through: its size afterward equals its size
    before plus the number of records with ``learned`` set.
    """
    last_cycle = -1
    for ev in events:
        if ev.cycle <= last_cycle:
            raise ValueError("events must be ordered by strictly increasing cycle")
        last_cycle = ev.cycle

    history = PlannerHistory()
    seen: dict[str, int] = {}
    records = []
    for event in events:
        sig = signature_of(event.task)
        seen[sig] = seen.get(sig, 0) + 1
        record = run_episode(
            event, mode, library, planner, thresholds, executor_config,
            repeat_index=seen[sig], history=history,
        )
        history.record_task(sig)
        records.append(record)
    return records


# ---------------------------------------------------------------------------
# Run-record streams (JSON lines, one record per line, fields in this order)
# ---------------------------------------------------------------------------

RECORD_FIELDS = (
    "policy", "task_id", "repeat_index", "cycle",
    "retrieve_s", "plan_llm_s", "execute_s", "collect_s", "train_s", "store_s",
    "total_s", "llm_calls", "llm_time_s", "success", "hit", "learned",
)


def record_to_dict(record: RunRecord) -> dict:
    return {name: getattr(record, name) for name in RECORD_FIELDS}


def record_from_dict(doc: dict) -> RunRecord:
    missing = [name for name in RECORD_FIELDS if name not in doc]
    if missing:
        raise ValueError(f"missing fields: {', '.join(missing)}")
    return RunRecord(**{name: doc[name] for name in RECORD_FIELDS})


def write_records(records: list[RunRecord], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record)) + "\n")


def read_records(path: str | Path) -> list[RunRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, TypeError, ValueError) as exc:
                raise RecordStreamError(line_no, str(exc)) from exc
    return records
