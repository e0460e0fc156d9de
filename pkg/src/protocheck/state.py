"""Immutable protocol state: messages, FIFO input queues, process records.

Every value here is frozen. State edits return new objects and never touch
their inputs, so states can be shared freely between the search engine, the
visited set, and reconstructed traces. The canonical byte encoding defined at
the bottom is what the engine uses to deduplicate states.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Union

# Neighbor sentinel for processes that have not joined the ring yet.
# Deliberately outside [0, N) so it can never collide with a real rank.
UNSET = -1


class ModelError(Exception):
    """Base class for errors raised by state operations."""


class QueueOverflowError(ModelError):
    """A send would exceed the receiver's queue capacity.

    The engine surfaces this as its own verdict: it means the model's
    capacity bound is too small. Messages are never silently dropped.
    """


class EmptyQueueError(ModelError):
    """Receive from an empty queue. Always a broken transition-rule guard."""


class MessageKind(Enum):
    BARRIER_IN = "barrier_in"
    BARRIER_OUT = "barrier_out"
    REQ_INSERT = "req_insert"
    INSERT_ACK = "insert_ack"
    NEW_RHS = "new_rhs"


_PAYLOAD_ARITY = {
    MessageKind.BARRIER_IN: 0,
    MessageKind.BARRIER_OUT: 0,
    MessageKind.REQ_INSERT: 1,
    MessageKind.INSERT_ACK: 2,
    MessageKind.NEW_RHS: 1,
}

_KIND_CODE = {
    MessageKind.BARRIER_IN: "bi",
    MessageKind.BARRIER_OUT: "bo",
    MessageKind.REQ_INSERT: "ri",
    MessageKind.INSERT_ACK: "ia",
    MessageKind.NEW_RHS: "nr",
}


@dataclass(frozen=True)
class Message:
    """Tagged value traveling in a process input queue.

    The payload arity is fixed per kind: barrier tokens carry nothing,
    req_insert carries the requester's rank, new_rhs the new right-neighbor
    rank, insert_ack the joiner's (lhs, rhs) pair.
    """

    kind: MessageKind
    payload: tuple[int, ...] = ()

    def __post_init__(self):
        want = _PAYLOAD_ARITY[self.kind]
        if len(self.payload) != want:
            raise ValueError(
                f"{self.kind.value} carries {want} id(s), got {len(self.payload)}"
            )


_BARRIER_IN = Message(MessageKind.BARRIER_IN)
_BARRIER_OUT = Message(MessageKind.BARRIER_OUT)


def barrier_in() -> Message:
    return _BARRIER_IN


def barrier_out() -> Message:
    return _BARRIER_OUT


def req_insert(requester: int) -> Message:
    return Message(MessageKind.REQ_INSERT, (requester,))


def insert_ack(lhs: int, rhs: int) -> Message:
    return Message(MessageKind.INSERT_ACK, (lhs, rhs))


def new_rhs(neighbor: int) -> Message:
    return Message(MessageKind.NEW_RHS, (neighbor,))


# A FIFO input queue: head at index 0, sends append at the tail.
Queue = tuple[Message, ...]


@dataclass(frozen=True)
class BarrierProcessState:
    """Barrier-model process: three bits plus the input queue."""

    client_barrier_in: int = 0
    client_barrier_out: int = 0
    holding_barrier_in: int = 0
    queue: Queue = ()

    def __post_init__(self):
        for bit in (self.client_barrier_in, self.client_barrier_out,
                    self.holding_barrier_in):
            if bit not in (0, 1):
                raise ValueError("barrier process fields are bits")
        if self.holding_barrier_in and self.client_barrier_in:
            # a held entry token is forwarded the moment the client asks
            raise ValueError("cannot hold barrier_in after the client request")
        if self.client_barrier_out and not self.client_barrier_in:
            raise ValueError("client released before it reached the barrier")


class RingStatus(Enum):
    OUTSIDE = "outside"
    INSERTING = "inserting"
    IN_RING = "in_ring"


@dataclass(frozen=True)
class RingProcessState:
    """Ring-model process: membership status, both neighbors, input queue."""

    status: RingStatus = RingStatus.OUTSIDE
    lhs: int = UNSET
    rhs: int = UNSET
    queue: Queue = ()

    def __post_init__(self):
        if self.status is RingStatus.OUTSIDE and (
            self.lhs != UNSET or self.rhs != UNSET
        ):
            raise ValueError("a process outside the ring has no neighbors")


ProcessState = Union[BarrierProcessState, RingProcessState]


@dataclass(frozen=True)
class SystemState:
    """Ordered vector of per-process states; the unit of exploration.

    The process count is fixed for the lifetime of a run and all processes
    are the same protocol variant.
    """

    processes: tuple[ProcessState, ...]
    queue_capacity: int

    def __post_init__(self):
        if not self.processes:
            raise ValueError("a system needs at least one process")
        if self.queue_capacity < 1:
            raise ValueError("queue capacity must be positive")
        first = type(self.processes[0])
        if any(type(p) is not first for p in self.processes):
            raise ValueError("all processes must be the same protocol variant")


def replace_process(state: SystemState, pid: int, proc: ProcessState) -> SystemState:
    """New state with process `pid` swapped out; everything else shared."""
    procs = state.processes
    return replace(state, processes=procs[:pid] + (proc,) + procs[pid + 1:])


def send_message(state: SystemState, to: int, message: Message) -> SystemState:
    """Append `message` at the tail of process `to`'s input queue.

    Raises QueueOverflowError when the queue is at capacity and ValueError
    when `to` or a payload rank is out of range.
    """
    n = len(state.processes)
    if not 0 <= to < n:
        raise ValueError(f"send target {to} out of range for {n} processes")
    for rank in message.payload:
        if not 0 <= rank < n:
            raise ValueError(f"payload id {rank} out of range for {n} processes")
    proc = state.processes[to]
    if len(proc.queue) >= state.queue_capacity:
        raise QueueOverflowError(
            f"queue of process {to} is at capacity {state.queue_capacity}"
        )
    return replace_process(state, to, replace(proc, queue=proc.queue + (message,)))


def receive_message(state: SystemState, pid: int) -> SystemState:
    """Remove the head of process `pid`'s queue, preserving FIFO order."""
    proc = state.processes[pid]
    if not proc.queue:
        raise EmptyQueueError(f"process {pid}: receive on an empty queue")
    return replace_process(state, pid, replace(proc, queue=proc.queue[1:]))


def peek(state: SystemState, pid: int) -> Message | None:
    """Head of process `pid`'s queue without removing it; None if empty."""
    queue = state.processes[pid].queue
    return queue[0] if queue else None


def _encode_message(m: Message) -> str:
    if m.payload:
        return _KIND_CODE[m.kind] + "." + ".".join(map(str, m.payload))
    return _KIND_CODE[m.kind]


def _encode_process(p: ProcessState) -> str:
    msgs = ",".join(_encode_message(m) for m in p.queue)
    if isinstance(p, BarrierProcessState):
        return (
            f"{p.client_barrier_in},{p.client_barrier_out},"
            f"{p.holding_barrier_in}:{msgs}"
        )
    return f"{p.status.value[0]},{p.lhs},{p.rhs}:{msgs}"


def canonical_encode(state: SystemState) -> bytes:
    """Deterministic byte encoding, injective on structurally distinct states.

    Field separators never occur inside field renderings, so the encoding
    parses back uniquely: encode(a) == encode(b) iff a == b. Used as the
    visited-set key by the engine.
    """
    return ";".join(_encode_process(p) for p in state.processes).encode("ascii")
