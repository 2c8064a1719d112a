"""Task descriptors and the repeated-task benchmark corpus generator.

A task pairs a natural-language instruction with a hidden target action
sequence. The corpus generator emits a deterministic, repeat-major stream of
task events: every task appears once per repeat round, and in
``observation_first`` mode the first round is delivered as successful
external observations instead of self-execution requests.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .errors import SchemaError

# Executable action identifiers shared by tasks, methods, and the planner.
DEFAULT_ACTIONS: tuple[str, ...] = (
    "move", "grasp", "lift", "place", "rotate", "push",
    "pull", "open", "close", "scan", "align", "release",
)

SELF_TASK = "self_task"
OBSERVED_EVENT = "observed_event"
EVENT_KINDS = (SELF_TASK, OBSERVED_EVENT)

SELF_EXECUTION = "self_execution"
OBSERVATION_FIRST = "observation_first"
CORPUS_MODES = (SELF_EXECUTION, OBSERVATION_FIRST)

_VERBS = ("pick", "stack", "fetch", "sort", "insert", "flip", "pack", "wipe")
_COLORS = ("red", "blue", "green", "yellow", "black", "white")
_OBJECTS = ("cube", "ball", "peg", "tray", "bottle", "gear", "plate", "ring")

_TOKEN_RE = re.compile(r"[^a-z0-9]+")


def normalize_token(token: str) -> str:
    """Lowercase a goal token and drop punctuation/whitespace."""
    return _TOKEN_RE.sub("", token.lower())


def normalize_goal(goal: Iterable[str]) -> tuple[str, ...]:
    """Canonical ordered goal tokens: normalized, empties dropped."""
    return tuple(t for t in (normalize_token(tok) for tok in goal) if t)


@dataclass(frozen=True)
class TaskConstraints:
    max_steps: int
    deadline_s: float | None = None

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be a positive integer")
        if self.deadline_s is not None and self.deadline_s < 0:
            raise ValueError("deadline_s must be nonnegative when present")


@dataclass(frozen=True)
class TaskDescriptor:
    """One benchmark task.

    ``target_sequence`` is the ground-truth action chain used by the
    simulated environment to judge executions; policies must not read it.
    """

    id: str
    instruction: str
    goal: tuple[str, ...]
    environment: Mapping[str, str]
    observations: tuple[str, ...]
    constraints: TaskConstraints
    target_sequence: tuple[str, ...]

    def __post_init__(self):
        if not self.goal:
            raise ValueError("goal must be non-empty")
        if not normalize_goal(self.goal):
            raise ValueError("goal must contain at least one non-empty token")
        if len(self.target_sequence) > self.constraints.max_steps:
            raise ValueError("target_sequence longer than constraints.max_steps")


@dataclass(frozen=True)
class ObservedEvent:
    """A successful (or failed) external behavior the agent witnessed."""

    task_signature: str
    action_sequence: tuple[str, ...]
    success: bool
    context: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.success and not self.action_sequence:
            raise ValueError("successful observation must carry a non-empty action_sequence")


@dataclass(frozen=True)
class TaskEvent:
    cycle: int
    kind: str
    task: TaskDescriptor
    observed: ObservedEvent | None = None

    def __post_init__(self):
        if self.cycle < 0:
            raise ValueError("cycle must be nonnegative")
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")
        if (self.kind == OBSERVED_EVENT) != (self.observed is not None):
            raise ValueError("observed payload present iff kind is observed_event")


def signature_of(task: TaskDescriptor) -> str:
    """Content signature over the normalized goal and constraints.

    Descriptors that differ only in id, instruction, environment, or target
    collide on purpose: structurally identical tasks should retrieve the
    same methods.
    """
    payload = {
        "goal": list(normalize_goal(task.goal)),
        "max_steps": task.constraints.max_steps,
        "deadline_s": task.constraints.deadline_s,
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def generate_corpus(
    seed: int,
    n_tasks: int,
    n_repeats: int,
    mode: str = SELF_EXECUTION,
    vocab: tuple[str, ...] = DEFAULT_ACTIONS,
) -> list[TaskEvent]:
    """Build the deterministic repeated-task event stream.

    Returns ``n_tasks * n_repeats`` events in repeat-major order (every task
    once per round). In ``observation_first`` mode the whole first round is
    observed events whose action sequences equal the hidden targets; later
    rounds are ordinary self-execution tasks.

    The stream is a pure function of the arguments: identical inputs yield a
    byte-identical corpus.
    """
    if n_tasks < 1:
        raise ValueError("n_tasks must be >= 1")
    if n_repeats < 1:
        raise ValueError("n_repeats must be >= 1")
    if mode not in CORPUS_MODES:
        raise ValueError(f"unknown corpus mode {mode!r}")
    if not vocab:
        raise ValueError("action vocabulary must be non-empty")

    combos = list(itertools.product(_VERBS, _COLORS, _OBJECTS))
    if n_tasks > len(combos):
        raise ValueError(f"n_tasks must be <= {len(combos)}")

    rng = random.Random(seed)
    rng.shuffle(combos)

    tasks = []
    for i, (verb, color, obj) in enumerate(combos[:n_tasks]):
        length = rng.randint(3, 6)
        target = tuple(rng.choice(vocab) for _ in range(length))
        tasks.append(
            TaskDescriptor(
                id=f"task-{i:03d}",
                instruction=f"{verb} the {color} {obj}",
                goal=(verb, color, obj),
                environment={"workspace": "bench-1", "object": obj, "color": color},
                observations=("vision", "proprioception"),
                constraints=TaskConstraints(max_steps=8),
                target_sequence=target,
            )
        )

    events: list[TaskEvent] = []
    cycle = 0
    for repeat in range(1, n_repeats + 1):
        for task in tasks:
            if mode == OBSERVATION_FIRST and repeat == 1:
                observed = ObservedEvent(
                    task_signature=signature_of(task),
                    action_sequence=task.target_sequence,
                    success=True,
                    context={"source": "external-agent"},
                )
                events.append(TaskEvent(cycle, OBSERVED_EVENT, task, observed))
            else:
                events.append(TaskEvent(cycle, SELF_TASK, task))
            cycle += 1
    return events


def mean_target_length(events: Iterable[TaskEvent]) -> float:
    """Mean hidden-target length over the distinct tasks in a stream."""
    by_sig: dict[str, int] = {}
    for ev in events:
        by_sig.setdefault(signature_of(ev.task), len(ev.task.target_sequence))
    if not by_sig:
        raise ValueError("empty event stream")
    return sum(by_sig.values()) / len(by_sig)


# ---------------------------------------------------------------------------
# Corpus persistence: {"version": 1, "events": [...]}
# ---------------------------------------------------------------------------

CORPUS_VERSION = 1


def _task_to_dict(task: TaskDescriptor) -> dict:
    return {
        "id": task.id,
        "instruction": task.instruction,
        "goal": list(task.goal),
        "environment": dict(task.environment),
        "observations": list(task.observations),
        "constraints": {
            "max_steps": task.constraints.max_steps,
            "deadline_s": task.constraints.deadline_s,
        },
        "target_sequence": list(task.target_sequence),
    }


def _task_from_dict(doc: dict, where: str) -> TaskDescriptor:
    try:
        constraints = doc["constraints"]
        return TaskDescriptor(
            id=doc["id"],
            instruction=doc["instruction"],
            goal=tuple(doc["goal"]),
            environment=dict(doc["environment"]),
            observations=tuple(doc["observations"]),
            constraints=TaskConstraints(
                max_steps=constraints["max_steps"],
                deadline_s=constraints.get("deadline_s"),
            ),
            target_sequence=tuple(doc["target_sequence"]),
        )
    except KeyError as exc:
        raise SchemaError(f"{where}.{exc.args[0]}", "missing field") from exc
    except (TypeError, ValueError) as exc:
        raise SchemaError(where, str(exc)) from exc


def corpus_to_doc(events: Iterable[TaskEvent]) -> dict:
    out = []
    for ev in events:
        entry: dict = {"cycle": ev.cycle, "kind": ev.kind, "task": _task_to_dict(ev.task)}
        if ev.observed is None:
            entry["observed"] = None
        else:
            entry["observed"] = {
                "task_signature": ev.observed.task_signature,
                "action_sequence": list(ev.observed.action_sequence),
                "success": ev.observed.success,
                "context": dict(ev.observed.context),
            }
        out.append(entry)
    return {"version": CORPUS_VERSION, "events": out}


def corpus_from_doc(doc: dict) -> list[TaskEvent]:
    if not isinstance(doc, dict):
        raise SchemaError("<root>", "expected a JSON object")
    if doc.get("version") != CORPUS_VERSION:
        raise SchemaError("version", f"expected {CORPUS_VERSION}, got {doc.get('version')!r}")
    raw_events = doc.get("events")
    if not isinstance(raw_events, list):
        raise SchemaError("events", "expected a list")

    events: list[TaskEvent] = []
    last_cycle = -1
    for i, entry in enumerate(raw_events):
        where = f"events[{i}]"
        if not isinstance(entry, dict):
            raise SchemaError(where, "expected an object")
        try:
            task = _task_from_dict(entry["task"], f"{where}.task")
            observed_doc = entry.get("observed")
            observed = None
            if observed_doc is not None:
                observed = ObservedEvent(
                    task_signature=observed_doc["task_signature"],
                    action_sequence=tuple(observed_doc["action_sequence"]),
                    success=observed_doc["success"],
                    context=dict(observed_doc.get("context", {})),
                )
            event = TaskEvent(entry["cycle"], entry["kind"], task, observed)
        except KeyError as exc:
            raise SchemaError(f"{where}.{exc.args[0]}", "missing field") from exc
        except (TypeError, ValueError) as exc:
            raise SchemaError(where, str(exc)) from exc
        if event.cycle <= last_cycle:
            raise SchemaError(f"{where}.cycle", "cycle values must be strictly increasing")
        last_cycle = event.cycle
        events.append(event)
    return events


def save_corpus(events: Iterable[TaskEvent], path: str | Path) -> None:
    Path(path).write_text(json.dumps(corpus_to_doc(events), indent=2) + "\n", encoding="utf-8")


def load_corpus(path: str | Path) -> list[TaskEvent]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError("<root>", f"not valid JSON: {exc}") from exc
    return corpus_from_doc(doc)
