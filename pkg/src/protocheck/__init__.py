"""Explicit-state model checker for asynchronous message-passing protocols."""

from .barrier import BarrierConfig, barrier_model
from .engine import (
    ExplorationResult,
    ExploreConfig,
    ProtocolModel,
    RunStats,
    TraceStep,
    TransitionRule,
    Verdict,
    explore,
    reconstruct_trace,
    stats_report,
)
from .ring import RingConfig, ring_model
from .state import (
    BarrierProcessState,
    EmptyQueueError,
    Message,
    MessageKind,
    ModelError,
    QueueOverflowError,
    RingProcessState,
    RingStatus,
    SystemState,
    UNSET,
    barrier_in,
    barrier_out,
    canonical_encode,
    insert_ack,
    new_rhs,
    peek,
    receive_message,
    replace_process,
    req_insert,
    send_message,
)

__all__ = [
    "BarrierConfig",
    "BarrierProcessState",
    "EmptyQueueError",
    "ExplorationResult",
    "ExploreConfig",
    "Message",
    "MessageKind",
    "ModelError",
    "ProtocolModel",
    "QueueOverflowError",
    "RingConfig",
    "RingProcessState",
    "RingStatus",
    "RunStats",
    "SystemState",
    "TraceStep",
    "TransitionRule",
    "UNSET",
    "Verdict",
    "barrier_in",
    "barrier_model",
    "barrier_out",
    "canonical_encode",
    "explore",
    "insert_ack",
    "new_rhs",
    "peek",
    "receive_message",
    "reconstruct_trace",
    "replace_process",
    "req_insert",
    "ring_model",
    "send_message",
    "stats_report",
]
