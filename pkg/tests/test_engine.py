from __future__ import annotations

import json

import pytest

from reuseloop.engine import (
    ALWAYS_LLM,
    LIBRARY_ONLY,
    OBSERVATION_ONLY,
    PROPOSED,
    PROPOSED_OBSERVATION,
    ExecutorConfig,
    RunRecord,
    SequenceExecutor,
    VirtualClock,
    read_records,
    record_to_dict,
    run_episode,
    run_loop,
    write_records,
)
from reuseloop.errors import PlanningFailedError, RecordStreamError
from reuseloop.library import MethodLibrary
from reuseloop.planner import MockPlanner
from reuseloop.tasks import (
    OBSERVATION_FIRST,
    SELF_TASK,
    TaskEvent,
    generate_corpus,
    signature_of,
)
from reuseloop.trigger import TriggerThresholds

from conftest import method_for_task

CFG = ExecutorConfig(
    base_s=1.0, per_step_s=0.1, retrieve_s=0.01, collect_s=0.2,
    train_s=0.3, store_s=0.05, observe_s=0.15,
)
THRESHOLDS = TriggerThresholds()
LATENCY = 0.5


def planner(p_corrupt=0.0, seed=1):
    return MockPlanner(seed=seed, latency_s=LATENCY, p_corrupt=p_corrupt)


def self_event(task, cycle=0):
    return TaskEvent(cycle=cycle, kind=SELF_TASK, task=task)


def exec_time(task):
    return CFG.base_s + CFG.per_step_s * len(task.target_sequence)


class _FailingPlanner:
    def plan(self, task, history=None, feedback=None):
        raise PlanningFailedError("endpoint unreachable")

    replan = plan


class TestProposedMode:
    def test_first_encounter_learns(self, task, library):
        record = run_episode(self_event(task), PROPOSED, library, planner(), THRESHOLDS, CFG)
        assert record.llm_calls == 1
        assert record.learned and not record.hit
        assert record.success
        assert len(library) == 1
        want = CFG.retrieve_s + LATENCY + CFG.collect_s + CFG.train_s + CFG.store_s + exec_time(task)
        assert record.total_s == pytest.approx(want)
        assert record.llm_time_s == LATENCY

    def test_second_encounter_reuses(self, task, library):
        run_episode(self_event(task, 0), PROPOSED, library, planner(), THRESHOLDS, CFG)
        record = run_episode(
            self_event(task, 1), PROPOSED, library, planner(), THRESHOLDS, CFG, repeat_index=2
        )
        assert record.llm_calls == 0
        assert record.hit and not record.learned
        assert record.success
        assert record.total_s == pytest.approx(CFG.retrieve_s + exec_time(task))
        assert len(library) == 1
        rel = library.methods()[0].reliability
        assert (rel.successes, rel.attempts) == (2, 2)

    def test_corrupted_plan_fails_validation_and_is_not_stored(self, task, library):
        record = run_episode(
            self_event(task), PROPOSED, library, planner(p_corrupt=1.0), THRESHOLDS, CFG
        )
        assert not record.success
        assert not record.learned
        assert len(library) == 0
        # store phase never charged on a failed consolidation
        assert record.store_s == 0.0
        assert record.train_s == CFG.train_s

    def test_planner_failure_marks_episode_failed(self, task, library):
        record = run_episode(self_event(task), PROPOSED, library, _FailingPlanner(), THRESHOLDS, CFG)
        assert not record.success
        assert record.llm_calls == 0
        assert record.total_s == pytest.approx(CFG.retrieve_s)

    def test_refinement_reentry_replaces_failing_method(self, task, library):
        # A fresh (0/0) exact-match method is trusted at the confidence
        # boundary, but its procedure is wrong: reuse fails, utility drops to
        # 0, and the engine re-enters learning once within the episode.
        bad = method_for_task(task, method_id="m-bad", successes=0, attempts=0,
                              procedure=("rotate",) * 3)
        library.insert(bad)
        record = run_episode(self_event(task, cycle=5), PROPOSED, library, planner(), THRESHOLDS, CFG)
        assert not record.success  # the reuse execution itself failed
        assert record.llm_calls == 1
        assert record.learned and not record.hit
        assert len(library) == 2
        assert library.get("m-bad").reliability.attempts == 1
        fresh = [m for m in library.methods() if m.id != "m-bad"][0]
        assert fresh.procedure == task.target_sequence

    def test_healthy_method_not_refined(self, task, library):
        library.insert(method_for_task(task, successes=3, attempts=3))
        record = run_episode(self_event(task), PROPOSED, library, planner(), THRESHOLDS, CFG)
        assert record.hit and not record.learned
        assert record.llm_calls == 0
        assert len(library) == 1


class TestBaselineModes:
    def test_always_llm_never_inserts(self, task, library):
        mock = planner()
        record = run_episode(self_event(task), ALWAYS_LLM, library, mock, THRESHOLDS, CFG)
        assert record.llm_calls == 1
        assert record.success
        assert not record.learned and not record.hit
        assert len(library) == 0
        assert record.retrieve_s == 0.0  # baseline keeps no library
        assert record.total_s == pytest.approx(LATENCY + exec_time(task))

    def test_always_llm_corruption_fails(self, task, library):
        record = run_episode(
            self_event(task), ALWAYS_LLM, library, planner(p_corrupt=1.0), THRESHOLDS, CFG
        )
        assert not record.success
        assert record.total_s == pytest.approx(LATENCY + exec_time(task))

    def test_library_only_uncovered_fails_without_planning(self, task, library):
        mock = planner()
        record = run_episode(self_event(task), LIBRARY_ONLY, library, mock, THRESHOLDS, CFG)
        assert not record.success
        assert record.llm_calls == 0
        assert mock.calls_made == 0
        assert record.total_s == pytest.approx(CFG.retrieve_s)

    def test_library_only_covered_executes(self, task, library):
        library.insert(method_for_task(task))
        mock = planner()
        record = run_episode(self_event(task), LIBRARY_ONLY, library, mock, THRESHOLDS, CFG)
        assert record.success and record.hit
        assert mock.calls_made == 0
        assert record.total_s == pytest.approx(CFG.retrieve_s + exec_time(task))


class TestObservationModes:
    def _observed_event(self, cycle=0):
        events = generate_corpus(seed=3, n_tasks=1, n_repeats=1, mode=OBSERVATION_FIRST)
        event = events[0]
        return TaskEvent(cycle=cycle, kind=event.kind, task=event.task, observed=event.observed)

    def test_observation_only_just_watches(self, library):
        event = self._observed_event()
        mock = planner()
        record = run_episode(event, OBSERVATION_ONLY, library, mock, THRESHOLDS, CFG)
        assert record.success
        assert record.total_s == pytest.approx(CFG.observe_s)
        assert mock.calls_made == 0
        assert len(library) == 0

    def test_observation_only_self_rounds_match_always_llm(self, task, library):
        record = run_episode(self_event(task), OBSERVATION_ONLY, library, planner(), THRESHOLDS, CFG)
        assert record.llm_calls == 1
        assert record.total_s == pytest.approx(LATENCY + exec_time(task))
        assert len(library) == 0

    def test_proposed_observation_consolidates(self, library):
        event = self._observed_event()
        record = run_episode(event, PROPOSED_OBSERVATION, library, planner(), THRESHOLDS, CFG)
        assert record.learned and not record.hit
        assert record.success
        assert record.llm_calls == 1
        assert record.execute_s == 0.0  # observation rounds do not execute
        want = CFG.observe_s + CFG.retrieve_s + LATENCY + CFG.train_s + CFG.store_s
        assert record.total_s == pytest.approx(want)
        assert len(library) == 1
        assert library.methods()[0].procedure == event.task.target_sequence
        assert library.methods()[0].data_profile.n_obs_samples == len(event.task.target_sequence)

    def test_covered_observation_is_no_action(self, library):
        event = self._observed_event()
        library.insert(method_for_task(event.task))
        mock = planner()
        record = run_episode(event, PROPOSED_OBSERVATION, library, mock, THRESHOLDS, CFG)
        assert not record.learned and not record.hit
        assert record.success
        assert mock.calls_made == 0
        assert record.total_s == pytest.approx(CFG.observe_s + CFG.retrieve_s)
        assert len(library) == 1

    def test_observation_corrects_corrupted_plan(self, library):
        # The observed sequence outvotes a corrupted direct solution.
        event = self._observed_event()
        record = run_episode(
            event, PROPOSED_OBSERVATION, library, planner(p_corrupt=1.0), THRESHOLDS, CFG
        )
        assert record.learned and record.success
        assert library.methods()[0].procedure == event.task.target_sequence


class TestRunLoop:
    def test_proposed_counts_on_reference_corpus(self, library):
        events = generate_corpus(seed=7, n_tasks=20, n_repeats=5)
        records = run_loop(events, PROPOSED, library, planner(), THRESHOLDS, CFG)
        assert sum(r.learned for r in records) == 20
        assert sum(r.hit for r in records) == 80
        assert all(r.success for r in records)
        assert len(library) == 20
        assert all(r.learned for r in records if r.repeat_index == 1)
        assert all(r.hit for r in records if r.repeat_index > 1)

    def test_library_growth_matches_learned_flags(self, library):
        events = generate_corpus(seed=7, n_tasks=8, n_repeats=3)
        before = len(library)
        records = run_loop(events, PROPOSED, library, planner(), THRESHOLDS, CFG)
        assert len(library) == before + sum(r.learned for r in records)

    def test_proposed_observation_reference_corpus(self, library):
        events = generate_corpus(seed=7, n_tasks=20, n_repeats=5, mode=OBSERVATION_FIRST)
        records = run_loop(events, PROPOSED_OBSERVATION, library, planner(), THRESHOLDS, CFG)
        learned = [r for r in records if r.learned]
        assert len(learned) == 20
        assert all(r.repeat_index == 1 for r in learned)
        assert all(r.hit for r in records if r.repeat_index > 1)
        assert all(r.success for r in records)

    def test_empty_stream(self, library):
        assert run_loop([], PROPOSED, library, planner(), THRESHOLDS, CFG) == []
        assert len(library) == 0

    def test_unordered_cycles_rejected(self, task, library):
        events = [self_event(task, 1), self_event(task, 0)]
        with pytest.raises(ValueError):
            run_loop(events, PROPOSED, library, planner(), THRESHOLDS, CFG)

    def test_clock_consistency_across_modes(self):
        for mode in (ALWAYS_LLM, LIBRARY_ONLY, PROPOSED, OBSERVATION_ONLY, PROPOSED_OBSERVATION):
            corpus_mode = (
                OBSERVATION_FIRST
                if mode in (OBSERVATION_ONLY, PROPOSED_OBSERVATION)
                else "self_execution"
            )
            events = generate_corpus(seed=5, n_tasks=6, n_repeats=3, mode=corpus_mode)
            records = run_loop(events, mode, MethodLibrary(), planner(), THRESHOLDS, CFG)
            for r in records:
                phase_sum = (
                    r.retrieve_s + r.plan_llm_s + r.execute_s + r.collect_s + r.train_s + r.store_s
                )
                assert r.total_s == phase_sum
                assert r.llm_time_s <= r.total_s

    def test_determinism_byte_for_byte(self):
        def one_run():
            events = generate_corpus(seed=11, n_tasks=10, n_repeats=4)
            records = run_loop(events, PROPOSED, MethodLibrary(), planner(seed=11), THRESHOLDS, CFG)
            return json.dumps([record_to_dict(r) for r in records])

        assert one_run() == one_run()

    def test_repeat_indices_count_signature_occurrences(self, library):
        events = generate_corpus(seed=2, n_tasks=3, n_repeats=4)
        records = run_loop(events, ALWAYS_LLM, library, planner(), THRESHOLDS, CFG)
        by_sig: dict[str, list[int]] = {}
        for event, record in zip(events, records):
            by_sig.setdefault(signature_of(event.task), []).append(record.repeat_index)
        assert all(indices == [1, 2, 3, 4] for indices in by_sig.values())


class TestRecordStreams:
    def _records(self):
        events = generate_corpus(seed=4, n_tasks=4, n_repeats=2)
        return run_loop(events, PROPOSED, MethodLibrary(), planner(), THRESHOLDS, CFG)

    def test_round_trip(self, tmp_path):
        records = self._records()
        path = tmp_path / "runs.jsonl"
        write_records(records, path)
        assert read_records(path) == records

    def test_malformed_line_reports_line_number(self, tmp_path):
        records = self._records()
        path = tmp_path / "runs.jsonl"
        write_records(records, path)
        lines = path.read_text().splitlines()
        lines[2] = '{"policy": "proposed"}'
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(RecordStreamError) as err:
            read_records(path)
        assert err.value.line_no == 3


class TestClockAndExecutor:
    def test_unknown_phase_rejected(self):
        clock = VirtualClock()
        with pytest.raises(ValueError):
            clock.add("nap", 1.0)
        with pytest.raises(ValueError):
            clock.add("train", -0.1)

    def test_now_is_phase_sum(self):
        clock = VirtualClock()
        clock.add("retrieve", 0.25)
        clock.add("execute", 1.5)
        assert clock.now_s == pytest.approx(1.75)

    def test_executor_collect_labels_steps(self, task):
        executor = SequenceExecutor(task, CFG)
        clock = VirtualClock()
        from reuseloop.experience import EpisodeDataset

        ds = EpisodeDataset(signature_of(task))
        wrong = list(task.target_sequence)
        wrong[1] = "rotate" if wrong[1] != "rotate" else "push"
        executor.collect(wrong, ds, clock)
        assert [s.outcome.success for s in ds.self_samples] == [
            a == b for a, b in zip(wrong, task.target_sequence)
        ]
        assert clock.phases["collect"] == CFG.collect_s

    def test_record_invariants(self):
        with pytest.raises(ValueError):
            RunRecord(
                policy=PROPOSED, task_id="t", repeat_index=1, cycle=0,
                retrieve_s=0, plan_llm_s=0, execute_s=0, collect_s=0, train_s=0, store_s=0,
                total_s=0, llm_calls=0, llm_time_s=0, success=True, hit=True, learned=True,
            )

    def test_negative_executor_config_rejected(self):
        with pytest.raises(ValueError):
            ExecutorConfig(base_s=-1.0)
