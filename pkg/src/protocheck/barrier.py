"""Ring barrier model: a token circulates to collect, then to release.

Clients are folded into two bits per process: client_barrier_in records that
the client asked to enter the barrier, client_barrier_out that it was let
through. Process 0 leads. Its client's request launches barrier_in around the
ring; a non-leader forwards the token if its own client already asked,
otherwise it parks the token behind the holding bit until the request
arrives. When barrier_in comes back to the leader every client has reached
the barrier, so the leader launches barrier_out, which releases each client
as it passes. The leader's own client is released either last (when
barrier_out returns) or first (when it is emitted), per the variant.

The invariant: nobody is released until everyone has arrived. The
postcondition at termination: everybody was released and nothing is pending.
"""

from dataclasses import dataclass, replace
from functools import partial
from typing import Optional

from .engine import ProtocolModel, TransitionRule
from .state import (
    BarrierProcessState,
    MessageKind,
    SystemState,
    barrier_in,
    barrier_out,
    peek,
    receive_message,
    replace_process,
    send_message,
)

LEADER = 0

LEADER_LAST = "leader_last"
LEADER_FIRST = "leader_first"
VARIANTS = (LEADER_LAST, LEADER_FIRST)

# Seeded bug for exercising counterexample machinery: a non-leader releases
# its client already when forwarding barrier_in, before everyone arrived.
RELEASE_ON_BARRIER_IN = "release_on_barrier_in"
MUTATIONS = (RELEASE_ON_BARRIER_IN,)


@dataclass(frozen=True)
class BarrierConfig:
    n: int
    variant: str = LEADER_LAST
    queue_capacity: Optional[int] = None
    mutation: Optional[str] = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("process count must be at least 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown barrier variant {self.variant!r}")
        if self.mutation is not None and self.mutation not in MUTATIONS:
            raise ValueError(f"unknown mutation {self.mutation!r}")
        if self.queue_capacity is not None and self.queue_capacity < 1:
            raise ValueError("queue capacity must be positive")

    @property
    def capacity(self) -> int:
        return self.queue_capacity if self.queue_capacity is not None else self.n + 2


def next_rank(pid: int, n: int) -> int:
    return (pid + 1) % n


def barrier_initial_state(cfg: BarrierConfig) -> SystemState:
    """All bits zero, all queues empty."""
    return SystemState(
        processes=tuple(BarrierProcessState() for _ in range(cfg.n)),
        queue_capacity=cfg.capacity,
    )


def _cli_in(state: SystemState, pid: int) -> int:
    return state.processes[pid].client_barrier_in


def _head_kind(state: SystemState, pid: int) -> Optional[MessageKind]:
    head = peek(state, pid)
    return head.kind if head is not None else None


def client_request_enabled(state: SystemState, pid: int) -> bool:
    return _cli_in(state, pid) == 0


def rule_client_request(state: SystemState, pid: int) -> SystemState:
    """The client asks for the barrier (spontaneous, handled exactly once).

    The leader's request launches barrier_in to its right-hand side. A
    non-leader that was holding the token forwards it now.
    """
    n = len(state.processes)
    proc = state.processes[pid]
    if pid == LEADER:
        out = replace_process(state, pid, replace(proc, client_barrier_in=1))
        return send_message(out, next_rank(pid, n), barrier_in())
    if proc.holding_barrier_in:
        out = replace_process(
            state, pid, replace(proc, client_barrier_in=1, holding_barrier_in=0)
        )
        return send_message(out, next_rank(pid, n), barrier_in())
    return replace_process(state, pid, replace(proc, client_barrier_in=1))


def barrier_in_nonleader_enabled(state: SystemState, pid: int) -> bool:
    return pid != LEADER and _head_kind(state, pid) is MessageKind.BARRIER_IN


def rule_barrier_in_nonleader(
    state: SystemState, pid: int, release_on_forward: bool = False
) -> SystemState:
    """Non-leader handles barrier_in: forward if its client already asked,
    otherwise hold it."""
    n = len(state.processes)
    out = receive_message(state, pid)
    proc = out.processes[pid]
    if proc.client_barrier_in:
        if release_on_forward:  # seeded bug, see RELEASE_ON_BARRIER_IN
            out = replace_process(out, pid, replace(proc, client_barrier_out=1))
        return send_message(out, next_rank(pid, n), barrier_in())
    return replace_process(out, pid, replace(proc, holding_barrier_in=1))


def barrier_in_leader_enabled(state: SystemState, pid: int) -> bool:
    return pid == LEADER and _head_kind(state, pid) is MessageKind.BARRIER_IN


def rule_barrier_in_leader(
    state: SystemState, pid: int, variant: str = LEADER_LAST
) -> SystemState:
    """barrier_in returned to the leader: everyone arrived, start the release
    round. Under leader_first the leader's own client goes through now."""
    n = len(state.processes)
    out = receive_message(state, pid)
    out = send_message(out, next_rank(pid, n), barrier_out())
    if variant == LEADER_FIRST:
        proc = out.processes[pid]
        out = replace_process(out, pid, replace(proc, client_barrier_out=1))
    return out


def barrier_out_enabled(state: SystemState, pid: int) -> bool:
    return _head_kind(state, pid) is MessageKind.BARRIER_OUT


def rule_barrier_out(
    state: SystemState, pid: int, variant: str = LEADER_LAST
) -> SystemState:
    """Handle barrier_out: a non-leader releases its client and forwards the
    token; the leader consumes it (releasing its client only under
    leader_last, where it is the last to do so)."""
    n = len(state.processes)
    out = receive_message(state, pid)
    proc = out.processes[pid]
    if pid != LEADER:
        out = replace_process(out, pid, replace(proc, client_barrier_out=1))
        return send_message(out, next_rank(pid, n), barrier_out())
    if variant == LEADER_LAST:
        return replace_process(out, pid, replace(proc, client_barrier_out=1))
    return out


def barrier_invariant(state: SystemState) -> bool:
    """No client released until every client has reached the barrier."""
    if any(p.client_barrier_out for p in state.processes):
        return all(p.client_barrier_in for p in state.processes)
    return True


def barrier_postcondition(state: SystemState) -> bool:
    """Terminal states must have released everyone, with nothing pending."""
    return all(
        p.client_barrier_out == 1 and p.holding_barrier_in == 0 and not p.queue
        for p in state.processes
    )


def barrier_model(cfg: BarrierConfig) -> ProtocolModel:
    release = cfg.mutation == RELEASE_ON_BARRIER_IN
    rules = (
        TransitionRule("client_request", client_request_enabled, rule_client_request),
        TransitionRule(
            "barrier_in_nonleader",
            barrier_in_nonleader_enabled,
            partial(rule_barrier_in_nonleader, release_on_forward=release),
        ),
        TransitionRule(
            "barrier_in_leader",
            barrier_in_leader_enabled,
            partial(rule_barrier_in_leader, variant=cfg.variant),
        ),
        TransitionRule(
            "barrier_out",
            barrier_out_enabled,
            partial(rule_barrier_out, variant=cfg.variant),
        ),
    )
    return ProtocolModel(
        name="barrier",
        process_count=cfg.n,
        initial_states=(barrier_initial_state(cfg),),
        rules=rules,
        invariant=barrier_invariant,
        terminal_postcondition=barrier_postcondition,
    )
