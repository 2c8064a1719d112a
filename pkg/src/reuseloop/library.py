"""Persistent method library with scored retrieval.

A method packages an executable procedure together with its provenance
(data profile), applicability conditions, and a running reliability record.
Retrieval scores a task against every stored method and reports whether the
best match clears the caller's reuse threshold.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .errors import LibraryError, SchemaError
from .tasks import TaskDescriptor, normalize_goal, signature_of

LIBRARY_VERSION = 1


@dataclass
class DataProfile:
    """Sample counts behind a method."""

    n_self_samples: int = 0
    n_obs_samples: int = 0
    episodes: int = 0

    def __post_init__(self):
        if min(self.n_self_samples, self.n_obs_samples, self.episodes) < 0:
            raise ValueError("data profile counts must be nonnegative")


@dataclass
class Applicability:
    """Where a method applies: exact signatures plus a token fingerprint."""

    signatures: set[str]
    goal_tokens: set[str]
    max_steps: int

    def __post_init__(self):
        if not self.signatures:
            raise ValueError("applicability.signatures must be non-empty")
        if self.max_steps < 1:
            raise ValueError("applicability.max_steps must be positive")


@dataclass
class Reliability:
    successes: int = 0
    attempts: int = 0
    created_cycle: int = 0
    last_used_cycle: int = 0

    def __post_init__(self):
        if self.successes < 0 or self.attempts < 0:
            raise ValueError("reliability counters must be nonnegative")
        if self.successes > self.attempts:
            raise ValueError("successes must not exceed attempts")

    @property
    def success_ratio(self) -> float:
        return self.successes / self.attempts if self.attempts else 0.0


@dataclass
class Method:
    """A stored, reusable solution.

    ``procedure`` is the executable action chain; ``step_params`` optionally
    carries one parameter map per step. Everything except the reliability
    counters is immutable by convention: refinement produces a new method
    under a new id rather than editing in place.
    """

    id: str
    procedure: tuple[str, ...]
    params: dict[str, Any]
    data_profile: DataProfile
    applicability: Applicability
    reliability: Reliability
    step_params: tuple[dict, ...] | None = None

    def __post_init__(self):
        if not self.id:
            raise ValueError("method id must be non-empty")
        if not self.procedure:
            raise ValueError("procedure must be non-empty")
        if self.step_params is not None and len(self.step_params) != len(self.procedure):
            raise ValueError("step_params must align with procedure")


@dataclass(frozen=True)
class RetrievalResult:
    method: Method | None
    score: float
    covered: bool

    def __post_init__(self):
        if self.covered and self.method is None:
            raise ValueError("covered result must carry a method")


def matching_score(task: TaskDescriptor, method: Method) -> float:
    """Score a task against one method, in [0, 1].

    Exact signature membership short-circuits to 1.0. Otherwise the score is
    the Jaccard similarity of the normalized goal-token sets, zeroed when the
    task's step budget cannot fit the method's procedure.
    """
    if signature_of(task) in method.applicability.signatures:
        return 1.0
    if task.constraints.max_steps < len(method.procedure):
        return 0.0
    task_tokens = set(normalize_goal(task.goal))
    return jaccard(task_tokens, method.applicability.goal_tokens)


def jaccard(a: set[str], b: set[str]) -> float:
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


class MethodLibrary:
    """In-memory method store with atomic inserts and JSON persistence.

    Reads may run concurrently; mutations take a lock so retrieval never
    observes a half-inserted method.
    """

    def __init__(self, methods: Iterable[Method] = ()):
        self._methods: dict[str, Method] = {}
        self._lock = threading.Lock()
        for m in methods:
            self.insert(m)

    def __len__(self) -> int:
        return len(self._methods)

    def __contains__(self, method_id: str) -> bool:
        return method_id in self._methods

    def methods(self) -> list[Method]:
        """Snapshot of stored methods in insertion order."""
        with self._lock:
            return list(self._methods.values())

    def get(self, method_id: str) -> Method:
        try:
            return self._methods[method_id]
        except KeyError:
            raise LibraryError(f"unknown method id {method_id!r}") from None

    def insert(self, method: Method) -> None:
        with self._lock:
            if method.id in self._methods:
                raise LibraryError(f"duplicate method id {method.id!r}")
            self._methods[method.id] = method

    def update_reliability(self, method_id: str, success: bool, cycle: int) -> None:
        with self._lock:
            method = self._methods.get(method_id)
            if method is None:
                raise LibraryError(f"unknown method id {method_id!r}")
            rel = method.reliability
            rel.attempts += 1
            if success:
                rel.successes += 1
            rel.last_used_cycle = cycle

    def retrieve_best(self, task: TaskDescriptor, tau_r: float) -> RetrievalResult:
        """Best-scoring method for ``task`` and whether it clears ``tau_r``.

        Ties break toward the higher success ratio, then the more recently
        used method, then the lexicographically smallest id. An empty library
        yields score 0 and no method.
        """
        if not 0.0 <= tau_r <= 1.0:
            raise ValueError("tau_r must lie in [0, 1]")
        candidates = self.methods()
        if not candidates:
            return RetrievalResult(method=None, score=0.0, covered=False)
        best = min(
            candidates,
            key=lambda m: (
                -matching_score(task, m),
                -m.reliability.success_ratio,
                -m.reliability.last_used_cycle,
                m.id,
            ),
        )
        score = matching_score(task, best)
        return RetrievalResult(method=best, score=score, covered=score >= tau_r)

    def stats(self) -> dict:
        """Inspection summary: method count plus per-method ratios, by id."""
        rows = []
        for m in sorted(self.methods(), key=lambda m: m.id):
            rows.append(
                {
                    "id": m.id,
                    "procedure_len": len(m.procedure),
                    "successes": m.reliability.successes,
                    "attempts": m.reliability.attempts,
                    "success_ratio": round(m.reliability.success_ratio, 4),
                    "n_signatures": len(m.applicability.signatures),
                    "n_goal_tokens": len(m.applicability.goal_tokens),
                }
            )
        return {"n_methods": len(self), "methods": rows}

    # -- persistence --------------------------------------------------------

    def to_doc(self) -> dict:
        return {
            "version": LIBRARY_VERSION,
            "methods": [_method_to_dict(m) for m in self.methods()],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_doc(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def from_doc(cls, doc: dict) -> "MethodLibrary":
        if not isinstance(doc, dict):
            raise SchemaError("<root>", "expected a JSON object")
        if doc.get("version") != LIBRARY_VERSION:
            raise SchemaError("version", f"expected {LIBRARY_VERSION}, got {doc.get('version')!r}")
        raw = doc.get("methods")
        if not isinstance(raw, list):
            raise SchemaError("methods", "expected a list")
        lib = cls()
        for i, entry in enumerate(raw):
            lib.insert(_method_from_dict(entry, f"methods[{i}]"))
        return lib

    @classmethod
    def load(cls, path: str | Path) -> "MethodLibrary":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError("<root>", f"not valid JSON: {exc}") from exc
        return cls.from_doc(doc)


def _method_to_dict(m: Method) -> dict:
    return {
        "id": m.id,
        "procedure": list(m.procedure),
        "step_params": list(m.step_params) if m.step_params is not None else None,
        "params": dict(m.params),
        "data_profile": {
            "n_self_samples": m.data_profile.n_self_samples,
            "n_obs_samples": m.data_profile.n_obs_samples,
            "episodes": m.data_profile.episodes,
        },
        "applicability": {
            "signatures": sorted(m.applicability.signatures),
            "goal_tokens": sorted(m.applicability.goal_tokens),
            "max_steps": m.applicability.max_steps,
        },
        "reliability": {
            "successes": m.reliability.successes,
            "attempts": m.reliability.attempts,
            "created_cycle": m.reliability.created_cycle,
            "last_used_cycle": m.reliability.last_used_cycle,
        },
    }


def _require(entry: dict, key: str, where: str, kind: type | tuple) -> Any:
    if key not in entry:
        raise SchemaError(f"{where}.{key}", "missing field")
    value = entry[key]
    if not isinstance(value, kind):
        raise SchemaError(f"{where}.{key}", f"expected {kind}, got {type(value).__name__}")
    return value


def _method_from_dict(entry: Any, where: str) -> Method:
    if not isinstance(entry, dict):
        raise SchemaError(where, "expected an object")
    rel = _require(entry, "reliability", where, dict)
    prof = _require(entry, "data_profile", where, dict)
    appl = _require(entry, "applicability", where, dict)
    successes = _require(rel, "successes", f"{where}.reliability", int)
    attempts = _require(rel, "attempts", f"{where}.reliability", int)
    if successes > attempts:
        raise SchemaError(f"{where}.reliability.successes", "successes exceed attempts")
    step_params = entry.get("step_params")
    try:
        return Method(
            id=_require(entry, "id", where, str),
            procedure=tuple(_require(entry, "procedure", where, list)),
            step_params=tuple(step_params) if step_params is not None else None,
            params=dict(_require(entry, "params", where, dict)),
            data_profile=DataProfile(
                n_self_samples=_require(prof, "n_self_samples", f"{where}.data_profile", int),
                n_obs_samples=_require(prof, "n_obs_samples", f"{where}.data_profile", int),
                episodes=_require(prof, "episodes", f"{where}.data_profile", int),
            ),
            applicability=Applicability(
                signatures=set(_require(appl, "signatures", f"{where}.applicability", list)),
                goal_tokens=set(_require(appl, "goal_tokens", f"{where}.applicability", list)),
                max_steps=_require(appl, "max_steps", f"{where}.applicability", int),
            ),
            reliability=Reliability(
                successes=successes,
                attempts=attempts,
                created_cycle=_require(rel, "created_cycle", f"{where}.reliability", int),
                last_used_cycle=_require(rel, "last_used_cycle", f"{where}.reliability", int),
            ),
        )
    except ValueError as exc:
        raise SchemaError(where, str(exc)) from exc
