"""Exhaustive reachability search over a protocol model.

The search derives every state reachable from the initial states through the
model's guarded transition rules, deduplicating by canonical encoding. Each
newly stored state is checked against the model invariant the moment it is
generated; once the frontier empties (the fixed point), every terminal state
is checked against the postcondition. Exploration is sequential and fully
deterministic, so all counts are reproducible run to run.
"""

import time
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

from .state import QueueOverflowError, SystemState, canonical_encode


class Verdict(Enum):
    VERIFIED = "verified"
    INVARIANT_VIOLATED = "invariant_violated"
    POSTCONDITION_VIOLATED = "postcondition_violated"
    QUEUE_OVERFLOW = "queue_overflow"
    LIMIT_EXCEEDED = "limit_exceeded"


@dataclass(frozen=True)
class TransitionRule:
    """A guarded successor function, parameterized by process id.

    `apply` must only be invoked on (state, pid) pairs where `enabled` holds,
    and must be deterministic; both are pure.
    """

    name: str
    enabled: Callable[[SystemState, int], bool]
    apply: Callable[[SystemState, int], SystemState]


@dataclass(frozen=True)
class ProtocolModel:
    """A protocol as a transition system plus its correctness properties."""

    name: str
    process_count: int
    initial_states: tuple[SystemState, ...]
    rules: tuple[TransitionRule, ...]
    invariant: Callable[[SystemState], bool]
    terminal_postcondition: Callable[[SystemState], bool]

    def rule_named(self, name: str) -> TransitionRule:
        for rule in self.rules:
            if rule.name == name:
                return rule
        raise KeyError(f"no rule named {name!r}")


@dataclass
class RunStats:
    states_stored: int = 0
    states_matched: int = 0
    transitions_fired: int = 0
    max_frontier: int = 0
    elapsed: float = 0.0
    peak_memory_estimate: int = 0


@dataclass(frozen=True)
class ExploreConfig:
    search_order: str = "bfs"  # "bfs" or "dfs"
    max_states: int = 10_000_000
    max_seconds: float = 600.0
    record_edges: bool = False


# One fired transition: (source id, rule name, pid, target id).
Edge = tuple[int, str, int, int]

# Rough per-stored-state bookkeeping cost (dict slot, list slots, object
# headers) added on top of the encoding bytes for the memory estimate.
_STATE_OVERHEAD = 112


@dataclass
class ExplorationResult:
    verdict: Verdict
    stats: RunStats
    witness: Optional[int]
    terminal_states: list[int]
    states: list[SystemState]
    parents: list[Optional[tuple[int, str, int]]]
    depths: list[int]
    initial_count: int
    edges: Optional[list[Edge]] = None


@dataclass(frozen=True)
class TraceStep:
    """One trace entry: the rule and pid that produced `state`.

    The first step of a trace carries no rule (its state is an initial one).
    """

    rule: Optional[str]
    pid: Optional[int]
    state: SystemState


def explore(model: ProtocolModel, config: ExploreConfig | None = None) -> ExplorationResult:
    """Derive and store every reachable state of `model`.

    Successors of each stored state are generated by iterating rules in
    declaration order and pids in ascending order; this fixes the traversal
    (and therefore the statistics) but never the reachable set. Under BFS a
    violating witness is found at minimal distance from an initial state.

    The search stops at the first invariant violation, at a limit, or at the
    fixed point. Queue overflow inside a rule is reported as its own verdict;
    any other exception out of a rule is a modeling bug and propagates.
    """
    cfg = config or ExploreConfig()
    if cfg.search_order not in ("bfs", "dfs"):
        raise ValueError(f"unknown search order {cfg.search_order!r}")
    if cfg.max_states < 1 or cfg.max_seconds <= 0:
        raise ValueError("limits must be positive")
    for init in model.initial_states:
        if len(init.processes) != model.process_count:
            raise ValueError("initial state size does not match process count")

    start = time.perf_counter()
    stats = RunStats()
    states: list[SystemState] = []
    parents: list[Optional[tuple[int, str, int]]] = []
    depths: list[int] = []
    visited: dict[bytes, int] = {}
    terminal: list[int] = []
    edges: Optional[list[Edge]] = [] if cfg.record_edges else None
    frontier: deque[int] = deque()
    initial_count = 0

    def finish(verdict: Verdict, witness: Optional[int] = None) -> ExplorationResult:
        stats.states_stored = len(states)
        stats.elapsed = time.perf_counter() - start
        stats.peak_memory_estimate = (
            sum(map(len, visited)) + _STATE_OVERHEAD * len(states)
        )
        return ExplorationResult(
            verdict=verdict,
            stats=stats,
            witness=witness,
            terminal_states=terminal,
            states=states,
            parents=parents,
            depths=depths,
            initial_count=initial_count,
            edges=edges,
        )

    def store(s: SystemState, enc: bytes, parent: Optional[tuple[int, str, int]]) -> int:
        assert enc not in visited  # store-once
        sid = len(states)
        states.append(s)
        parents.append(parent)
        depths.append(0 if parent is None else depths[parent[0]] + 1)
        visited[enc] = sid
        return sid

    for init in model.initial_states:
        enc = canonical_encode(init)
        if enc in visited:
            continue
        sid = store(init, enc, None)
        initial_count = len(states)
        frontier.append(sid)
        if not model.invariant(init):
            return finish(Verdict.INVARIANT_VIOLATED, witness=sid)

    while frontier:
        if time.perf_counter() - start > cfg.max_seconds:
            return finish(Verdict.LIMIT_EXCEEDED)
        if len(frontier) > stats.max_frontier:
            stats.max_frontier = len(frontier)
        sid = frontier.popleft() if cfg.search_order == "bfs" else frontier.pop()
        state = states[sid]
        fired = False
        for rule in model.rules:
            for pid in range(model.process_count):
                if not rule.enabled(state, pid):
                    continue
                fired = True
                try:
                    succ = rule.apply(state, pid)
                except QueueOverflowError:
                    return finish(Verdict.QUEUE_OVERFLOW, witness=sid)
                enc = canonical_encode(succ)
                tid = visited.get(enc)
                fresh = tid is None
                if fresh:
                    if len(states) >= cfg.max_states:
                        return finish(Verdict.LIMIT_EXCEEDED)
                    tid = store(succ, enc, (sid, rule.name, pid))
                    frontier.append(tid)
                else:
                    stats.states_matched += 1
                stats.transitions_fired += 1
                if edges is not None:
                    edges.append((sid, rule.name, pid, tid))
                if fresh and not model.invariant(succ):
                    return finish(Verdict.INVARIANT_VIOLATED, witness=tid)
        if not fired:
            terminal.append(sid)

    for tid in terminal:
        if not model.terminal_postcondition(states[tid]):
            return finish(Verdict.POSTCONDITION_VIOLATED, witness=tid)
    return finish(Verdict.VERIFIED)


def reconstruct_trace(result: ExplorationResult, target: int) -> list[TraceStep]:
    """Path of states from an initial state to `target`, via the parent map.

    Each step's state equals the named rule applied at the named pid to the
    previous step's state; the first step is an initial state with no rule.
    """
    if not 0 <= target < len(result.states):
        raise KeyError(f"unknown state id {target}")
    steps: list[TraceStep] = []
    sid = target
    while True:
        parent = result.parents[sid]
        if parent is None:
            steps.append(TraceStep(None, None, result.states[sid]))
            break
        parent_id, rule_name, pid = parent
        steps.append(TraceStep(rule_name, pid, result.states[sid]))
        sid = parent_id
    steps.reverse()
    return steps


def stats_report(result: ExplorationResult) -> RunStats:
    """The run's accumulated statistics (identical across repeated runs,
    except for the elapsed-time field)."""
    return result.stats
