"""Two-stage consolidation of episode experience into reusable methods.

A candidate solution moves through three stages: ``initial`` (seeded from
the plan's direct solution or from observed data), ``adjusted`` (quasi-real-
time per-step tweaks while samples arrive), and ``refined`` (post-episode
consolidation by per-index majority over successful samples). A refined
candidate that replays correctly and clears the plan's validation threshold
is packaged as a new library method.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .experience import EpisodeDataset, ExperienceSample
from .library import Applicability, DataProfile, Method, Reliability
from .planner import LearningPlan
from .tasks import TaskDescriptor, normalize_goal, signature_of

STAGE_INITIAL = "initial"
STAGE_ADJUSTED = "adjusted"
STAGE_REFINED = "refined"
_STAGE_ORDER = {STAGE_INITIAL: 0, STAGE_ADJUSTED: 1, STAGE_REFINED: 2}


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    replay_success: bool
    threshold_used: float

    def __post_init__(self):
        if self.passed and not self.replay_success:
            raise ValueError("a candidate cannot pass validation without a successful replay")


@dataclass
class CandidateSolution:
    stage: str
    sequence: list[str]
    per_step_confidence: list[float]
    model_family: str
    flagged_steps: set[int] = field(default_factory=set)
    validation: ValidationReport | None = None

    def __post_init__(self):
        if self.stage not in _STAGE_ORDER:
            raise ValueError(f"unknown stage {self.stage!r}")
        if len(self.per_step_confidence) != len(self.sequence):
            raise ValueError("per_step_confidence must align with sequence")


class Replayer:
    """Anything that can check a candidate sequence once, without side effects."""

    def replay(self, sequence: list[str]) -> bool:  # pragma: no cover - interface
        raise NotImplementedError


def initialize(plan: LearningPlan, dataset: EpisodeDataset) -> CandidateSolution:
    """Seed a candidate from the plan, falling back to recorded experience.

    Without a direct solution the candidate is the longest successful prefix
    of the dataset: walk step indices from 1 and keep, per index, the most
    frequent successful action until an index has no successful sample.
    """
    if plan.direct_solution is not None:
        sequence = list(plan.direct_solution)
    else:
        sequence = _successful_prefix(dataset)
        if not sequence:
            raise ValueError("no usable source: plan has no direct solution and dataset is empty")
    return CandidateSolution(
        stage=STAGE_INITIAL,
        sequence=sequence,
        per_step_confidence=[1.0] * len(sequence),
        model_family=plan.candidate_models[0].family,
    )


def _successful_prefix(dataset: EpisodeDataset) -> list[str]:
    by_index: dict[int, Counter] = {}
    for sample in dataset.all_samples():
        if sample.outcome.success:
            by_index.setdefault(sample.t, Counter())[sample.action] += 1
    sequence = []
    t = 1
    while t in by_index:
        action, _ = min(by_index[t].most_common(), key=lambda kv: (-kv[1], kv[0]))
        sequence.append(action)
        t += 1
    return sequence


def quasi_adjust(candidate: CandidateSolution, new_sample: ExperienceSample) -> CandidateSolution:
    """Fold one fresh sample into the candidate (intermediate stage).

    A failure at step k halves that step's confidence and flags the step for
    replacement during consolidation; a success averages the confidence back
    toward 1. Refined candidates are immutable.
    """
    if candidate.stage == STAGE_REFINED:
        raise ValueError("refined candidates cannot be adjusted")
    idx = new_sample.t - 1
    if not 0 <= idx < len(candidate.sequence):
        raise ValueError(f"sample step {new_sample.t} outside candidate of length {len(candidate.sequence)}")
    if new_sample.outcome.success:
        candidate.per_step_confidence[idx] = (candidate.per_step_confidence[idx] + 1.0) / 2.0
    else:
        candidate.per_step_confidence[idx] /= 2.0
        candidate.flagged_steps.add(new_sample.t)
    candidate.stage = STAGE_ADJUSTED
    return candidate


def train_episode(candidate: CandidateSolution, dataset: EpisodeDataset) -> CandidateSolution:
    """Post-episode consolidation (refined stage).

    For each step index of the candidate, pick the action with the most
    successful occurrences across self and observed samples; the candidate's
    own action wins ties, and remaining ties resolve lexicographically.
    Per-step confidence becomes the empirical success frequency at that
    index; indices with no samples keep their current action and confidence.
    """
    if candidate.stage == STAGE_REFINED:
        raise ValueError("refined candidates are immutable")
    samples_at: dict[int, list[ExperienceSample]] = {}
    for sample in dataset.all_samples():
        samples_at.setdefault(sample.t, []).append(sample)

    for i in range(len(candidate.sequence)):
        here = samples_at.get(i + 1)
        if not here:
            continue
        wins = Counter(s.action for s in here if s.outcome.success)
        current = candidate.sequence[i]
        if wins:
            top = max(wins.values())
            winners = {a for a, c in wins.items() if c == top}
            candidate.sequence[i] = current if current in winners else min(winners)
        candidate.per_step_confidence[i] = sum(
            1 for s in here if s.outcome.success
        ) / len(here)

    candidate.stage = STAGE_REFINED
    candidate.flagged_steps.clear()
    return candidate


def validate(
    candidate: CandidateSolution,
    executor: Replayer,
    update_criteria,
) -> ValidationReport:
    """Replay the refined sequence once and check the confidence floor.

    The report is also stamped onto the candidate so ``build_method`` can
    verify the candidate was validated.
    """
    if candidate.stage != STAGE_REFINED:
        raise ValueError("only refined candidates can be validated")
    replay_success = bool(executor.replay(list(candidate.sequence)))
    threshold = update_criteria.validation_threshold
    floor = min(candidate.per_step_confidence) if candidate.per_step_confidence else 0.0
    report = ValidationReport(
        passed=replay_success and floor >= threshold,
        replay_success=replay_success,
        threshold_used=threshold,
    )
    candidate.validation = report
    return report


def build_method(
    candidate: CandidateSolution,
    task: TaskDescriptor,
    dataset: EpisodeDataset,
    cycle: int,
) -> Method:
    """Package a validated candidate as a new method.

    Reliability starts at 1/1: the validation replay counts as the first
    successful attempt.
    """
    if candidate.validation is None or not candidate.validation.passed:
        raise ValueError("method construction requires a passing validation report")
    signature = signature_of(task)
    return Method(
        id=f"m-{signature[:12]}-c{cycle:04d}",
        procedure=tuple(candidate.sequence),
        params={"model_family": candidate.model_family},
        data_profile=DataProfile(
            n_self_samples=len(dataset.self_samples),
            n_obs_samples=len(dataset.obs_samples),
            episodes=1,
        ),
        applicability=Applicability(
            signatures={signature},
            goal_tokens=set(normalize_goal(task.goal)),
            max_steps=task.constraints.max_steps,
        ),
        reliability=Reliability(
            successes=1, attempts=1, created_cycle=cycle, last_used_cycle=cycle
        ),
    )


def utility(method: Method, current_cycle: int) -> float:
    """Long-term usefulness: success ratio decayed by time since last use."""
    idle = max(0, current_cycle - method.reliability.last_used_cycle)
    return method.reliability.success_ratio / (1.0 + 0.01 * idle)


def needs_refinement(method: Method, current_cycle: int, tau_u: float) -> bool:
    """True when utility falls strictly below ``tau_u``."""
    return utility(method, current_cycle) < tau_u
