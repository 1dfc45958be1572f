"""Single-node B.A.T.M.A.N. state machine.

Everything here is a pure function over immutable records, so the explorer can
hash and share states freely and the simulator can keep one value per node.

Sliding windows are stored as one integer bitmask per neighbour: bit ``k`` is
the flag for sequence number ``last_sqn - k`` (mod range), so bit 0 is the
newest slot. :func:`window_entries` expands a mask into the oldest-to-newest
flag sequence.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional


class ConfigError(ValueError):
    """Raised when a parameter set violates its invariants."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class Interpretation(enum.Enum):
    LITERAL = "literal"
    ALTERNATIVE = "alternative"


@dataclass(frozen=True)
class ProtocolParams:
    n_nodes: int
    max_sqn: int = 15
    ttl_max: int = 10
    window_size: int = 5
    bi_link_timeout: int = 5
    buffer_capacity: int = 64
    interpretation: Interpretation = Interpretation.LITERAL

    def __post_init__(self):
        if isinstance(self.interpretation, str):
            object.__setattr__(self, "interpretation", Interpretation(self.interpretation))
        if self.n_nodes < 1:
            raise ConfigError("n_nodes", "need at least one node")
        if self.window_size < 1:
            raise ConfigError("window_size", "must be >= 1")
        if self.max_sqn < 1:
            raise ConfigError("max_sqn", "must be >= 1")
        if self.sqn_range < 2 * self.window_size:
            raise ConfigError(
                "max_sqn",
                f"range {self.sqn_range} must be at least twice window_size {self.window_size}",
            )
        if not 1 <= self.bi_link_timeout <= self.sqn_range // 2:
            raise ConfigError("bi_link_timeout", f"must lie in [1, {self.sqn_range // 2}]")
        if self.ttl_max < 2:
            raise ConfigError("ttl_max", "must be >= 2")
        if self.buffer_capacity < 1:
            raise ConfigError("buffer_capacity", "must be >= 1")

    @property
    def sqn_range(self) -> int:
        return self.max_sqn + 1

    @property
    def literal(self) -> bool:
        return self.interpretation is Interpretation.LITERAL


class OGM(NamedTuple):
    oid: int
    sid: int
    sqn: int
    ttl: int
    is_direct: bool = False
    is_unidirectional: bool = False


class OriginatorEntry(NamedTuple):
    """One routing-table row. ``None`` marks a field that was never set."""

    bidirectional_sqn: Optional[int]
    last_sqn: Optional[int]
    last_ttl: Optional[int]
    windows: tuple[int, ...]
    designated_best: Optional[int] = None


class NodeState(NamedTuple):
    id: int
    own_sqn: int
    table: tuple[OriginatorEntry, ...]
    buffer: tuple[OGM, ...]
    buffer_error: int = 0
    ogm_budget: int = 0


class RuleSet(NamedTuple):
    r524: bool
    r526: bool
    r527: bool

    @property
    def drop(self) -> bool:
        return not (self.r524 or self.r526 or self.r527)


def empty_entry(params: ProtocolParams) -> OriginatorEntry:
    return OriginatorEntry(None, None, None, (0,) * params.n_nodes, None)


def initial_state(node_id: int, params: ProtocolParams, ogm_budget: int = 0) -> NodeState:
    entry = empty_entry(params)
    return NodeState(node_id, 0, (entry,) * params.n_nodes, (), 0, ogm_budget)


def window_entries(mask: int, window_size: int) -> tuple[bool, ...]:
    """Flags ordered oldest first; the final flag belongs to ``last_sqn``."""
    return tuple(bool(mask >> k & 1) for k in reversed(range(window_size)))


# --- sequence-number arithmetic -------------------------------------------

def newer_than(a: int, b: Optional[int], params: ProtocolParams) -> bool:
    if b is None:
        return True
    r = params.sqn_range
    return 1 <= (a - b) % r <= r // 2


def window_offset(s: int, last: Optional[int], params: ProtocolParams) -> Optional[int]:
    """Slot index of ``s`` counted back from ``last``, or None when outside the window."""
    if last is None:
        return None
    k = (last - s) % params.sqn_range
    return k if k < params.window_size else None


# --- neighbour ranking ------------------------------------------------------

def _argmax(windows: tuple[int, ...]) -> list[int]:
    best = 0
    hops: list[int] = []
    for n, mask in enumerate(windows):
        c = mask.bit_count()
        if c == 0 or c < best:
            continue
        if c > best:
            best = c
            hops = [n]
        else:
            hops.append(n)
    return hops


def _nominate(windows: tuple[int, ...], previous: Optional[int]) -> Optional[int]:
    hops = _argmax(windows)
    if not hops:
        return None
    if previous in hops:
        return previous
    return hops[0]


def shift_and_record(entry: OriginatorEntry, ogm: OGM, params: ProtocolParams) -> OriginatorEntry:
    last = entry.last_sqn
    windows = entry.windows
    last_ttl = entry.last_ttl
    if newer_than(ogm.sqn, last, params):
        if last is not None:
            k = (ogm.sqn - last) % params.sqn_range
            if k >= params.window_size:
                windows = (0,) * len(windows)
            else:
                full = (1 << params.window_size) - 1
                windows = tuple((m << k) & full for m in windows)
        last = ogm.sqn
        last_ttl = ogm.ttl
    offset = window_offset(ogm.sqn, last, params)
    if offset is None:
        raise ValueError(f"sqn {ogm.sqn} is neither newer than nor inside the window of {entry.last_sqn}")
    windows = windows[: ogm.sid] + (windows[ogm.sid] | 1 << offset,) + windows[ogm.sid + 1 :]
    best = _nominate(windows, entry.designated_best) if params.literal else None
    return OriginatorEntry(entry.bidirectional_sqn, last, last_ttl, windows, best)


def is_duplicate(entry: OriginatorEntry, ogm: OGM, params: ProtocolParams) -> bool:
    offset = window_offset(ogm.sqn, entry.last_sqn, params)
    return offset is not None and bool(entry.windows[ogm.sid] >> offset & 1)


def is_bidirectional(state: NodeState, neighbor: int, params: ProtocolParams) -> bool:
    bd = state.table[neighbor].bidirectional_sqn
    if bd is None:
        return False
    return (state.own_sqn - bd) % params.sqn_range < params.bi_link_timeout


def best_next_hops(state: NodeState, oid: int, params: ProtocolParams) -> frozenset[int]:
    """Neighbours currently ranked best toward ``oid``.

    Under the literal reading this is the designated hop (at most one node);
    under the alternative reading every neighbour tied at the top count.
    """
    entry = state.table[oid]
    if params.literal:
        return frozenset() if entry.designated_best is None else frozenset((entry.designated_best,))
    return frozenset(_argmax(entry.windows))


def designated_best(state: NodeState, oid: int) -> Optional[int]:
    return state.table[oid].designated_best


# --- rule classification ----------------------------------------------------

def classify(state: NodeState, ogm: OGM, params: ProtocolParams) -> RuleSet:
    if ogm.oid == state.id:
        return RuleSet(True, False, False)

    entry = state.table[ogm.oid]
    bd = is_bidirectional(state, ogm.sid, params)
    newer = newer_than(ogm.sqn, entry.last_sqn, params)
    inw = window_offset(ogm.sqn, entry.last_sqn, params) is not None
    dup = inw and is_duplicate(entry, ogm, params)
    fresh = inw and not dup

    if params.literal:
        r526 = bd and newer
    else:
        r526 = bd and (newer or fresh)

    r527 = ogm.ttl >= 2 and ogm.oid == ogm.sid
    if not r527 and ogm.ttl >= 2 and bd and ogm.sid in best_next_hops(state, ogm.oid, params):
        if params.literal:
            r527 = newer or fresh or (inw and ogm.ttl == entry.last_ttl)
        else:
            r527 = newer or (fresh and ogm.ttl >= entry.last_ttl)
    return RuleSet(False, r526, r527)


# --- processes --------------------------------------------------------------

def _with_entry(state: NodeState, idx: int, entry: OriginatorEntry) -> NodeState:
    table = state.table[:idx] + (entry,) + state.table[idx + 1 :]
    return state._replace(table=table)


def process_5_3(state: NodeState, ogm: OGM) -> NodeState:
    """Bidirectional link check on an echo of one of our own OGMs."""
    if not (ogm.is_direct and ogm.sqn == state.own_sqn):
        return state
    entry = state.table[ogm.sid]._replace(bidirectional_sqn=ogm.sqn)
    return _with_entry(state, ogm.sid, entry)


def process_5_4(state: NodeState, ogm: OGM, params: ProtocolParams) -> NodeState:
    """Neighbour ranking: record ``ogm`` in the originator's sliding window."""
    return _with_entry(state, ogm.oid, shift_and_record(state.table[ogm.oid], ogm, params))


def process_5_5(state: NodeState, ogm: OGM, params: ProtocolParams) -> OGM:
    """Prepare ``ogm`` for rebroadcast by this node."""
    if ogm.ttl < 2:
        raise ValueError(f"cannot rebroadcast OGM with ttl {ogm.ttl}")
    return OGM(
        oid=ogm.oid,
        sid=state.id,
        sqn=ogm.sqn,
        ttl=ogm.ttl - 1,
        is_direct=ogm.sid == ogm.oid,
        is_unidirectional=not is_bidirectional(state, ogm.sid, params),
    )


def handle_next(state: NodeState, params: ProtocolParams) -> tuple[NodeState, Optional[OGM]]:
    """Pop the head of the buffer and process it.

    Returns the new state and the OGM to rebroadcast, if any.
    """
    ogm = state.buffer[0]
    rules = classify(state, ogm, params)
    popped = state._replace(buffer=state.buffer[1:])
    if rules.r524:
        return process_5_3(popped, ogm), None
    out = process_5_5(state, ogm, params) if rules.r527 else None
    if rules.r526:
        popped = process_5_4(popped, ogm, params)
    return popped, out


def receive(state: NodeState, ogm: OGM, params: ProtocolParams) -> NodeState:
    # Echoes of our own OGMs bypass the unidirectional drop: the bidirectional
    # link check runs before it, otherwise no link could ever be confirmed.
    if ogm.is_unidirectional and ogm.oid != state.id:
        return state
    if len(state.buffer) >= params.buffer_capacity:
        return state._replace(buffer_error=state.buffer_error + 1)
    return state._replace(buffer=state.buffer + (ogm,))


def create_own_ogm(state: NodeState, params: ProtocolParams) -> tuple[NodeState, OGM]:
    sqn = (state.own_sqn + 1) % params.sqn_range
    ogm = OGM(state.id, state.id, sqn, params.ttl_max)
    return state._replace(own_sqn=sqn), ogm
