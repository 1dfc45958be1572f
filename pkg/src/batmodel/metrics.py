"""Observables over a whole network, shared by the explorer and the simulator.

``nodes`` is always a sequence of :class:`~batmodel.protocol.NodeState`
indexed by node id.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

from .protocol import NodeState, ProtocolParams, best_next_hops, is_bidirectional
from .topology import Topology


@dataclass(frozen=True)
class MetricsSample:
    t: float
    bidir_misses: int
    no_route: int
    best_hop_total: int
    route_errors: int
    avg_buffer: float
    max_buffer: int
    buffer_error_total: int

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def route_row(v: NodeState, params: ProtocolParams) -> tuple[frozenset[int], ...]:
    return tuple(frozenset() if d == v.id else best_next_hops(v, d, params) for d in range(params.n_nodes))


def route_table(nodes: Sequence[NodeState], params: ProtocolParams) -> tuple[tuple[frozenset[int], ...], ...]:
    """Best-next-hop sets for every (node, destination); the diagonal is empty."""
    return tuple(route_row(v, params) for v in nodes)


def count_bidirectional_misses(nodes: Sequence[NodeState], topology: Topology, params: ProtocolParams) -> int:
    return sum(
        1
        for i, j in ((i, j) for i in range(topology.n) for j in topology.neighbors(i))
        if not is_bidirectional(nodes[i], j, params)
    )


def count_no_route(nodes: Sequence[NodeState], params: ProtocolParams) -> int:
    table = route_table(nodes, params)
    return sum(1 for v, row in enumerate(table) for d, hops in enumerate(row) if d != v and not hops)


def count_best_hops(nodes: Sequence[NodeState], params: ProtocolParams) -> int:
    return sum(len(hops) for row in route_table(nodes, params) for hops in row)


def count_suboptimal_hops(nodes: Sequence[NodeState], topology: Topology, params: ProtocolParams) -> int:
    """Number of (node, destination, hop) triples whose hop is not on a shortest path."""
    dist = topology.dist
    errors = 0
    for v, row in enumerate(route_table(nodes, params)):
        for d, hops in enumerate(row):
            for h in hops:
                if dist[h][d] != dist[v][d] - 1:
                    errors += 1
    return errors


def count_route_mismatch(nodes: Sequence[NodeState], topology: Topology, params: ProtocolParams) -> int:
    """Number of (node, destination) routes whose best-next-hops are all off every shortest path.

    A route with at least one optimal hop is not an error even if suboptimal
    hops tie with it. Under the literal reading each route has a single hop,
    so this equals :func:`count_suboptimal_hops`.
    """
    dist = topology.dist
    errors = 0
    for v, row in enumerate(route_table(nodes, params)):
        for d, hops in enumerate(row):
            if hops and all(dist[h][d] != dist[v][d] - 1 for h in hops):
                errors += 1
    return errors


def has_loop(nodes: Sequence[NodeState], params: ProtocolParams) -> bool:
    return table_has_loop(route_table(nodes, params))


def table_has_loop(table: Sequence[Sequence[frozenset[int]]]) -> bool:
    """Cycle search in the next-hop graph of each destination."""
    n = len(table)
    for d in range(n):
        # 0 unvisited, 1 on stack, 2 done
        colour = [0] * n
        colour[d] = 2
        for root in range(n):
            if colour[root]:
                continue
            stack = [(root, iter(table[root][d]))]
            colour[root] = 1
            while stack:
                v, it = stack[-1]
                for h in it:
                    if colour[h] == 1:
                        return True
                    if colour[h] == 0:
                        colour[h] = 1
                        stack.append((h, iter(table[h][d])))
                        break
                else:
                    colour[v] = 2
                    stack.pop()
    return False


def buffer_stats(nodes: Sequence[NodeState]) -> tuple[float, int, int]:
    sizes = [len(v.buffer) for v in nodes]
    if not sizes:
        return 0.0, 0, 0
    return sum(sizes) / len(sizes), max(sizes), sum(v.buffer_error for v in nodes)


def sample(t: float, nodes: Sequence[NodeState], topology: Topology, params: ProtocolParams) -> MetricsSample:
    avg, biggest, errors = buffer_stats(nodes)
    return MetricsSample(
        t=t,
        bidir_misses=count_bidirectional_misses(nodes, topology, params),
        no_route=count_no_route(nodes, params),
        best_hop_total=count_best_hops(nodes, params),
        route_errors=count_route_mismatch(nodes, topology, params),
        avg_buffer=avg,
        max_buffer=biggest,
        buffer_error_total=errors,
    )
