"""Exhaustive exploration of the untimed network model.

A global state is a tuple of :class:`NodeState`, one per node, with the
remaining own-OGM budget stored on each node. Broadcasts are atomic: the
emitted OGM lands in every neighbour's buffer within the same transition.

Transitions fall into two classes. *Internal* transitions pop a head OGM that
is not rebroadcast. *Send* transitions either emit a fresh own OGM or pop a
head OGM that is rebroadcast. With ``reduction`` on, internal transitions take
priority: when any is enabled, sends are not offered.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

from . import metrics
from .protocol import (
    OGM,
    NodeState,
    ProtocolParams,
    classify,
    create_own_ogm,
    handle_next,
    initial_state,
    receive,
)
from .topology import Topology

log = logging.getLogger(__name__)

GlobalState = tuple[NodeState, ...]

LOOP_FREE = "loop_freedom"
BIDIR_DISCOVERED = "bidirectional_links"
ROUTE_TO_ZERO = "route_to_node0"
PROPERTIES = (LOOP_FREE, BIDIR_DISCOVERED, ROUTE_TO_ZERO)

DEFAULT_STATE_CAP = 50_000_000


class Transition(NamedTuple):
    kind: str  # "process", "forward" or "send"
    node: int
    ogm: OGM  # the OGM consumed (process/forward) or created (send)
    out: Optional[OGM] = None  # what went on the air, if anything

    @property
    def internal(self) -> bool:
        return self.kind == "process"


@dataclass
class ExplorationReport:
    states_visited: int = 0
    transitions: int = 0
    quiescent_states: int = 0
    complete: bool = True
    violations: dict[str, list[Transition]] = field(default_factory=dict)
    quiescent_tables: set = field(default_factory=set)

    @property
    def passed(self) -> bool:
        return not self.violations and self.complete

    def summary(self) -> dict:
        return {
            "states_visited": self.states_visited,
            "transitions": self.transitions,
            "quiescent_states": self.quiescent_states,
            "complete": self.complete,
            "properties": {p: p not in self.violations for p in PROPERTIES},
        }


def initial_global(params: ProtocolParams, budgets: Sequence[int]) -> GlobalState:
    if len(budgets) != params.n_nodes:
        raise ValueError(f"need {params.n_nodes} budgets, got {len(budgets)}")
    return tuple(initial_state(i, params, b) for i, b in enumerate(budgets))


class _Model:
    """Successor generation with per-node memo tables.

    The same node-local state recurs across a huge number of global states,
    so stepping, receiving and route rows are cached by ``NodeState``.
    """

    def __init__(self, params: ProtocolParams, topology: Topology, reduction: bool):
        self.params = params
        self.neighbors = [topology.neighbors(i) for i in range(topology.n)]
        self.reduction = reduction
        self._step: dict[NodeState, tuple[bool, NodeState, Optional[OGM]]] = {}
        self._recv: dict[tuple[NodeState, OGM], NodeState] = {}
        self._rows: dict[NodeState, tuple[frozenset[int], ...]] = {}

    def step(self, v: NodeState) -> tuple[bool, NodeState, Optional[OGM]]:
        hit = self._step.get(v)
        if hit is None:
            forwards = classify(v, v.buffer[0], self.params).r527
            nv, out = handle_next(v, self.params)
            hit = self._step[v] = (forwards, nv, out)
        return hit

    def receive(self, v: NodeState, ogm: OGM) -> NodeState:
        key = (v, ogm)
        hit = self._recv.get(key)
        if hit is None:
            hit = self._recv[key] = receive(v, ogm, self.params)
        return hit

    def row(self, v: NodeState) -> tuple[frozenset[int], ...]:
        hit = self._rows.get(v)
        if hit is None:
            hit = self._rows[v] = metrics.route_row(v, self.params)
        return hit

    def route_table(self, g: GlobalState) -> tuple[tuple[frozenset[int], ...], ...]:
        return tuple(self.row(v) for v in g)

    def broadcast(self, g: GlobalState, sender: int, nv: NodeState, ogm: OGM) -> GlobalState:
        nodes = list(g)
        nodes[sender] = nv
        for j in self.neighbors[sender]:
            nodes[j] = self.receive(nodes[j], ogm)
        return tuple(nodes)

    def successors(self, g: GlobalState) -> list[tuple[Transition, GlobalState]]:
        internal = []
        sends = []
        for i, v in enumerate(g):
            if v.buffer:
                forwards, nv, out = self.step(v)
                if not forwards:
                    internal.append((Transition("process", i, v.buffer[0]), g[:i] + (nv,) + g[i + 1 :]))
                elif not (self.reduction and internal):
                    sends.append((Transition("forward", i, v.buffer[0], out), self.broadcast(g, i, nv, out)))
            if v.ogm_budget > 0 and not (self.reduction and internal):
                nv, ogm = create_own_ogm(v, self.params)
                nv = nv._replace(ogm_budget=v.ogm_budget - 1)
                sends.append((Transition("send", i, ogm, ogm), self.broadcast(g, i, nv, ogm)))
        if self.reduction and internal:
            return internal
        return internal + sends


def successors(
    g: GlobalState, params: ProtocolParams, topology: Topology, reduction: bool = True
) -> list[tuple[Transition, GlobalState]]:
    return _Model(params, topology, reduction).successors(g)


def reachable(
    params: ProtocolParams, topology: Topology, budgets: Sequence[int], reduction: bool = True
) -> Iterator[GlobalState]:
    """Every reachable global state, breadth first, each once."""
    model = _Model(params, topology, reduction)
    root = initial_global(params, budgets)
    seen = {root}
    frontier = deque([root])
    while frontier:
        g = frontier.popleft()
        yield g
        for _, nxt in model.successors(g):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)


def is_quiescent(g: GlobalState) -> bool:
    return all(v.ogm_budget == 0 and not v.buffer for v in g)


def _quiescent_violations(g: GlobalState, table, topology: Topology, params: ProtocolParams) -> list[str]:
    found = []
    if metrics.count_bidirectional_misses(g, topology, params):
        found.append(BIDIR_DISCOVERED)
    if any(not table[v][0] for v in range(1, len(g))):
        found.append(ROUTE_TO_ZERO)
    return found


def _trace(parents: dict, g: GlobalState) -> list[Transition]:
    steps = []
    while True:
        prev, label = parents[g]
        if prev is None:
            break
        steps.append(label)
        g = prev
    steps.reverse()
    return steps


def explore(
    params: ProtocolParams,
    topology: Topology,
    budgets: Sequence[int],
    reduction: bool = True,
    state_cap: int = DEFAULT_STATE_CAP,
) -> ExplorationReport:
    """Breadth-first search over every reachable state.

    Loop freedom is checked everywhere; link discovery and the route to
    node 0 only in quiescent states. The shortest counterexample for each
    violated property is kept.
    """
    if topology.n != params.n_nodes:
        raise ValueError(f"topology has {topology.n} nodes, params expect {params.n_nodes}")
    model = _Model(params, topology, reduction)
    report = ExplorationReport()
    root = initial_global(params, budgets)
    parents: dict[GlobalState, tuple[Optional[GlobalState], Optional[Transition]]] = {root: (None, None)}
    frontier = deque([root])

    def violate(prop: str, g: GlobalState):
        if prop not in report.violations:
            report.violations[prop] = _trace(parents, g)
            log.info("%s violated after %d steps", prop, len(report.violations[prop]))

    while frontier:
        g = frontier.popleft()
        report.states_visited += 1
        table = model.route_table(g)
        if metrics.table_has_loop(table):
            violate(LOOP_FREE, g)
        succ = model.successors(g)
        if not succ and is_quiescent(g):
            report.quiescent_states += 1
            report.quiescent_tables.add(table)
            for prop in _quiescent_violations(g, table, topology, params):
                violate(prop, g)
        for label, nxt in succ:
            report.transitions += 1
            if nxt in parents:
                continue
            if len(parents) >= state_cap:
                report.complete = False
                continue
            parents[nxt] = (g, label)
            frontier.append(nxt)
    return report


def format_trace(steps: Iterable[Transition]) -> str:
    """One line per transition: step, node, label, then the OGM fields."""
    lines = []
    for k, tr in enumerate(steps):
        o = tr.out if tr.out is not None else tr.ogm
        lines.append(
            f"{k} node={tr.node} {tr.kind} oid={o.oid} sid={o.sid} sqn={o.sqn} ttl={o.ttl} "
            f"direct={int(o.is_direct)} unidirectional={int(o.is_unidirectional)}"
        )
    return "\n".join(lines)
