"""Tasks, signatures, and scored method retrieval.

Walks through the benchmark's task representation: how goal tokens and step
constraints hash into content signatures, how a corpus of recurring tasks is
laid out, and how the method library scores candidates for reuse.
"""

from reuseloop import (
    MethodLibrary,
    generate_corpus,
    matching_score,
    signature_of,
)
from reuseloop.library import Applicability, DataProfile, Method, Reliability
from reuseloop.tasks import TaskConstraints, TaskDescriptor, normalize_goal


def banner(text):
    print(f"\n=== {text} ===")


banner("a corpus of recurring tasks")
events = generate_corpus(seed=7, n_tasks=5, n_repeats=3)
print(f"{len(events)} events ({5} tasks x {3} repeats, repeat-major order)")
for event in events[:5]:
    task = event.task
    print(
        f"  cycle {event.cycle}: {task.id}  '{task.instruction}'"
        f"  target={list(task.target_sequence)}"
    )

banner("signatures identify structurally identical tasks")
first = events[0].task
again = events[5].task  # the same task, one repeat later
print(f"repeat 1 signature: {signature_of(first)}")
print(f"repeat 2 signature: {signature_of(again)}  (equal: {signature_of(first) == signature_of(again)})")

shouty = TaskDescriptor(
    id="task-shout",
    instruction=first.instruction.upper(),
    goal=tuple(token.upper() + "!" for token in first.goal),
    environment=dict(first.environment),
    observations=first.observations,
    constraints=first.constraints,
    target_sequence=first.target_sequence,
)
print(f"case/punctuation variant:  {signature_of(shouty)}  (normalization collapses it)")

banner("matching scores")
stored = Method(
    id="m-demo",
    procedure=first.target_sequence,
    params={"model_family": "sequence"},
    data_profile=DataProfile(n_self_samples=4, n_obs_samples=0, episodes=1),
    applicability=Applicability(
        signatures={signature_of(first)},
        goal_tokens=set(normalize_goal(first.goal)),
        max_steps=first.constraints.max_steps,
    ),
    reliability=Reliability(successes=1, attempts=1),
)
library = MethodLibrary([stored])

for event in events[:5]:
    score = matching_score(event.task, stored)
    print(f"  {event.task.id} ({' '.join(event.task.goal)}): score {score:.2f}")

banner("retrieval against a reuse threshold")
exact, partial = events[0].task, events[2].task
for label, query in (("exact repeat", exact), ("shares one goal token", partial)):
    for tau_r in (0.2, 0.8):
        result = library.retrieve_best(query, tau_r)
        print(
            f"  {label:<22} tau_r={tau_r}: best={result.method.id if result.method else None}"
            f" score={result.score:.2f} covered={result.covered}"
        )

tight = TaskDescriptor(
    id="task-tight",
    instruction=first.instruction,
    goal=first.goal,
    environment=dict(first.environment),
    observations=first.observations,
    constraints=TaskConstraints(max_steps=2),
    target_sequence=first.target_sequence[:2],
)
print(
    "  a 2-step budget cannot fit the stored procedure:"
    f" score {matching_score(tight, stored):.2f}"
)
