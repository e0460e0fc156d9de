import dataclasses

import pytest

import oracle
from protocheck.barrier import (
    BarrierConfig,
    LEADER_FIRST,
    LEADER_LAST,
    RELEASE_ON_BARRIER_IN,
    barrier_model,
)
from protocheck.engine import (
    ExploreConfig,
    ProtocolModel,
    TransitionRule,
    Verdict,
    explore,
    reconstruct_trace,
    stats_report,
)
from protocheck.ring import ORDERED, RingConfig, UNORDERED, ring_model
from protocheck.state import (
    BarrierProcessState,
    EmptyQueueError,
    SystemState,
    canonical_encode,
    receive_message,
)


def small_models():
    models = []
    for variant in (LEADER_LAST, LEADER_FIRST):
        for n in (1, 2, 3):
            models.append((f"barrier-{variant}-{n}",
                           barrier_model(BarrierConfig(n=n, variant=variant))))
    for variant in (ORDERED, UNORDERED):
        for n in (2, 3, 4):
            models.append((f"ring-{variant}-{n}",
                           ring_model(RingConfig(n=n, variant=variant))))
    return models


def stored_set(result):
    return {canonical_encode(s) for s in result.states}


def check_accounting(result):
    st = result.stats
    assert st.transitions_fired == st.states_stored - result.initial_count + st.states_matched


class TestExplore:
    def test_barrier_n1_hand_simulated(self):
        # initial; after the request and self-send; after the token is
        # consumed and the release self-sent; after the release: 4 states
        result = explore(barrier_model(BarrierConfig(n=1)))
        assert result.verdict is Verdict.VERIFIED
        assert result.stats.states_stored == 4
        assert result.stats.states_matched == 0
        assert result.stats.transitions_fired == 3
        assert result.terminal_states == [3]

    def test_barrier_n3_matches_enumerator(self):
        model = barrier_model(BarrierConfig(n=3))
        result = explore(model)
        enumerated = oracle.enumerate_reachable(model)
        assert result.stats.states_stored == len(enumerated) == 18
        assert stored_set(result) == {canonical_encode(s) for s in enumerated}

    def test_initial_states_are_stored_once(self):
        model = barrier_model(BarrierConfig(n=2))
        doubled = dataclasses.replace(
            model, initial_states=model.initial_states * 2
        )
        result = explore(doubled)
        assert result.initial_count == 1
        assert result.stats.states_stored == 9

    def test_seeded_bug_found_at_minimal_depth(self):
        model = barrier_model(BarrierConfig(n=3, mutation=RELEASE_ON_BARRIER_IN))
        result = explore(model)
        assert result.verdict is Verdict.INVARIANT_VIOLATED
        assert result.witness is not None
        # exhaustive path enumeration confirms no shorter violation exists
        assert result.depths[result.witness] == oracle.min_violation_depth(model, 6) == 3

    def test_queue_overflow_is_a_verdict(self):
        model = ring_model(RingConfig(n=3, variant=UNORDERED, queue_capacity=1))
        result = explore(model)
        assert result.verdict is Verdict.QUEUE_OVERFLOW
        assert result.witness is not None
        check_accounting(result)

    def test_state_limit(self):
        result = explore(barrier_model(BarrierConfig(n=3)),
                         ExploreConfig(max_states=5))
        assert result.verdict is Verdict.LIMIT_EXCEEDED
        assert result.stats.states_stored == 5
        check_accounting(result)

    def test_time_limit(self):
        result = explore(barrier_model(BarrierConfig(n=3)),
                         ExploreConfig(max_seconds=1e-9))
        assert result.verdict is Verdict.LIMIT_EXCEEDED

    def test_config_validation(self):
        model = barrier_model(BarrierConfig(n=1))
        with pytest.raises(ValueError):
            explore(model, ExploreConfig(search_order="sideways"))
        with pytest.raises(ValueError):
            explore(model, ExploreConfig(max_states=0))
        with pytest.raises(ValueError):
            explore(model, ExploreConfig(max_seconds=0))

    def test_mismatched_initial_state_rejected(self):
        model = barrier_model(BarrierConfig(n=2))
        wrong = dataclasses.replace(model, process_count=3)
        with pytest.raises(ValueError):
            explore(wrong)

    def test_broken_guard_aborts_the_run(self):
        # a rule whose guard lies gets its EmptyQueueError propagated
        broken = ProtocolModel(
            name="broken",
            process_count=1,
            initial_states=(SystemState((BarrierProcessState(),), queue_capacity=2),),
            rules=(TransitionRule("consume", lambda s, pid: True,
                                  lambda s, pid: receive_message(s, pid)),),
            invariant=lambda s: True,
            terminal_postcondition=lambda s: True,
        )
        with pytest.raises(EmptyQueueError):
            explore(broken)

    def test_postcondition_violation_reported_at_terminal(self):
        model = barrier_model(BarrierConfig(n=2))
        strict = dataclasses.replace(model, terminal_postcondition=lambda s: False)
        result = explore(strict)
        assert result.verdict is Verdict.POSTCONDITION_VIOLATED
        # the first failing terminal in traversal order is the one reported
        assert result.witness == result.terminal_states[0]


@pytest.mark.parametrize("label,model", small_models())
class TestSearchProperties:
    def test_matches_brute_force_enumeration(self, label, model):
        result = explore(model)
        enumerated = oracle.enumerate_reachable(model)
        assert result.stats.states_stored == len(enumerated)
        assert stored_set(result) == {canonical_encode(s) for s in enumerated}

    def test_store_once(self, label, model):
        result = explore(model)
        assert len(stored_set(result)) == result.stats.states_stored

    def test_verified_means_no_violation_anywhere(self, label, model):
        result = explore(model)
        assert result.verdict is Verdict.VERIFIED
        assert all(model.invariant(s) for s in result.states)
        assert all(model.terminal_postcondition(result.states[t])
                   for t in result.terminal_states)

    def test_accounting_identity(self, label, model):
        check_accounting(explore(model))
        check_accounting(explore(model, ExploreConfig(search_order="dfs")))

    def test_bfs_and_dfs_store_the_same_set(self, label, model):
        bfs = explore(model)
        dfs = explore(model, ExploreConfig(search_order="dfs"))
        assert stored_set(bfs) == stored_set(dfs)
        assert bfs.stats.states_stored == dfs.stats.states_stored
        assert bfs.stats.states_matched == dfs.stats.states_matched


@pytest.mark.parametrize("model", [
    barrier_model(BarrierConfig(n=3)),
    ring_model(RingConfig(n=3, variant=UNORDERED)),
])
def test_bfs_depths_are_shortest_paths(model):
    result = explore(model)
    states, depths = oracle.depth_map(model)
    expected = {canonical_encode(s): d for s, d in zip(states, depths)}
    for sid, state in enumerate(result.states):
        assert result.depths[sid] == expected[canonical_encode(state)]


def test_accounting_holds_on_violation_runs():
    model = barrier_model(BarrierConfig(n=3, mutation=RELEASE_ON_BARRIER_IN))
    check_accounting(explore(model))


def test_stats_deterministic_across_runs():
    model = ring_model(RingConfig(n=4, variant=UNORDERED))
    a = stats_report(explore(model))
    b = stats_report(explore(model))
    assert dataclasses.replace(a, elapsed=0.0) == dataclasses.replace(b, elapsed=0.0)
    assert a.peak_memory_estimate > 0


class TestTrace:
    def test_initial_state_gives_single_step(self):
        result = explore(barrier_model(BarrierConfig(n=2)))
        trace = reconstruct_trace(result, 0)
        assert len(trace) == 1
        assert trace[0].rule is None and trace[0].pid is None
        assert trace[0].state == result.states[0]

    def test_every_trace_replays_exactly(self):
        model = barrier_model(BarrierConfig(n=3))
        result = explore(model)
        for sid in range(len(result.states)):
            trace = reconstruct_trace(result, sid)
            state = trace[0].state
            assert state == model.initial_states[0]
            for step in trace[1:]:
                rule = model.rule_named(step.rule)
                assert rule.enabled(state, step.pid)
                state = rule.apply(state, step.pid)
                assert state == step.state
            assert state == result.states[sid]
            assert len(trace) - 1 == result.depths[sid]

    def test_violation_trace_ends_in_the_violation(self):
        # n=3 is the smallest size where the seeded bug bites: at n=2 the
        # forwarding non-leader is always the last client to arrive anyway
        model = barrier_model(BarrierConfig(n=3, mutation=RELEASE_ON_BARRIER_IN))
        result = explore(model)
        assert result.verdict is Verdict.INVARIANT_VIOLATED
        trace = reconstruct_trace(result, result.witness)
        assert not model.invariant(trace[-1].state)
        for step in trace[:-1]:
            assert model.invariant(step.state)

    def test_unknown_state_id_rejected(self):
        result = explore(barrier_model(BarrierConfig(n=1)))
        with pytest.raises(KeyError):
            reconstruct_trace(result, 99)


def test_edges_recorded_only_on_request():
    model = barrier_model(BarrierConfig(n=2))
    assert explore(model).edges is None
    result = explore(model, ExploreConfig(record_edges=True))
    assert result.edges is not None
    assert len(result.edges) == result.stats.transitions_fired
    for src, rule_name, pid, dst in result.edges:
        rule = model.rule_named(rule_name)
        assert rule.enabled(result.states[src], pid)
        assert canonical_encode(rule.apply(result.states[src], pid)) == \
            canonical_encode(result.states[dst])
