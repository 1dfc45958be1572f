"""Seeded discrete-event simulation of the timed network model.

Each node creates a fresh OGM every ``uniform(min_ogmtime, max_ogmtime)``
time units. While its buffer is non-empty it processes the head OGM after a
``(0, max_response]`` delay, and any rebroadcast reaches every neighbour
instantly.

With ``urgent_internal`` set (the default), head OGMs that will not be
rebroadcast are consumed at once, in zero time, like urgent internal
transitions. Only rebroadcasts wait for the response delay. Clearing the
flag makes every pop, forwarding or not, wait its own delay.

Randomness comes from numpy's Philox counter-based generator. Every node has
its own stream keyed by ``(seed, run_index, node)``.
"""
from __future__ import annotations

import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import metrics
from .metrics import MetricsSample
from .protocol import (
    OGM,
    ConfigError,
    NodeState,
    ProtocolParams,
    classify,
    create_own_ogm,
    handle_next,
    initial_state,
    receive,
)
from .topology import Topology

CREATE = 0
PROCESS = 1


@dataclass(frozen=True)
class TimedConfig:
    min_ogmtime: float = 19.0
    max_ogmtime: float = 20.0
    max_response: float = 1.0
    horizon: float = 255.0
    runs: int = 100
    seed: int = 1
    sample_period: float = 5.0
    urgent_internal: bool = True

    def __post_init__(self):
        if not 0 < self.min_ogmtime <= self.max_ogmtime:
            raise ConfigError("min_ogmtime", "need 0 < min_ogmtime <= max_ogmtime")
        if self.max_response <= 0:
            raise ConfigError("max_response", "must be > 0")
        if self.horizon <= 0:
            raise ConfigError("horizon", "must be > 0")
        if self.sample_period <= 0:
            raise ConfigError("sample_period", "must be > 0")
        if self.runs < 1:
            raise ConfigError("runs", "must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", "must be an unsigned 64-bit value")

    def sample_times(self) -> list[float]:
        count = math.floor(self.horizon / self.sample_period + 1e-9)
        return [k * self.sample_period for k in range(count + 1)]


def node_rng(seed: int, run_index: int, node: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, run_index, node])))


class Simulation:
    """One run. After :meth:`run`, ``nodes`` holds the final protocol states."""

    def __init__(self, params: ProtocolParams, topology: Topology, cfg: TimedConfig, run_index: int = 0):
        if topology.n < 1:
            raise ConfigError("topology", "empty network")
        if topology.n != params.n_nodes:
            raise ConfigError("n_nodes", f"topology has {topology.n} nodes, params say {params.n_nodes}")
        self.params = params
        self.topology = topology
        self.cfg = cfg
        self.neighbors = [topology.neighbors(i) for i in range(topology.n)]
        self.rngs = [node_rng(cfg.seed, run_index, i) for i in range(topology.n)]
        self.nodes: list[NodeState] = [initial_state(i, params) for i in range(topology.n)]
        self.pending = [False] * topology.n
        self.head_since: list[Optional[float]] = [None] * topology.n
        self.queue: list[tuple[float, int, int, int]] = []
        self._tiebreak = 0
        self.now = 0.0
        self.events = 0
        self.wrapped = False
        self.max_head_wait = 0.0
        self.buffered = 0  # OGMs currently buffered network-wide
        self.occupancy_integral = 0.0
        self._last_t = 0.0

    def _schedule(self, t: float, kind: int, node: int):
        heapq.heappush(self.queue, (t, self._tiebreak, kind, node))
        self._tiebreak += 1

    def _response_delay(self, node: int) -> float:
        # random() is in [0, 1); flip it onto (0, 1]
        return self.cfg.max_response * (1.0 - self.rngs[node].random())

    def _advance(self, t: float):
        self.occupancy_integral += self.buffered * (t - self._last_t)
        self._last_t = t
        self.now = t

    def mean_occupancy(self) -> float:
        """Buffer length averaged over nodes and over the whole ``[0, horizon]`` interval."""
        return self.occupancy_integral / (self.cfg.horizon * self.topology.n)

    def _settle(self, i: int):
        v = self.nodes[i]
        if self.cfg.urgent_internal:
            while v.buffer and not classify(v, v.buffer[0], self.params).r527:
                v, _ = handle_next(v, self.params)
                self.buffered -= 1
            self.nodes[i] = v
        if v.buffer:
            if self.head_since[i] is None:
                self.head_since[i] = self.now
            if not self.pending[i]:
                self.pending[i] = True
                self._schedule(self.now + self._response_delay(i), PROCESS, i)
        else:
            self.head_since[i] = None

    def _broadcast(self, sender: int, ogm: OGM):
        for j in self.neighbors[sender]:
            before = len(self.nodes[j].buffer)
            self.nodes[j] = receive(self.nodes[j], ogm, self.params)
            self.buffered += len(self.nodes[j].buffer) - before
            self._settle(j)

    def _create(self, i: int):
        before = self.nodes[i].own_sqn
        self.nodes[i], ogm = create_own_ogm(self.nodes[i], self.params)
        if ogm.sqn < before:
            self.wrapped = True
        self._broadcast(i, ogm)
        self._settle(i)
        self._schedule(self.now + self.rngs[i].uniform(self.cfg.min_ogmtime, self.cfg.max_ogmtime), CREATE, i)

    def _process(self, i: int):
        self.pending[i] = False
        if not self.nodes[i].buffer:
            return
        self.max_head_wait = max(self.max_head_wait, self.now - self.head_since[i])
        self.head_since[i] = None
        self.nodes[i], out = handle_next(self.nodes[i], self.params)
        self.buffered -= 1
        if out is not None:
            self._broadcast(i, out)
        self._settle(i)

    def snapshot(self, t: float) -> MetricsSample:
        return metrics.sample(t, self.nodes, self.topology, self.params)

    def run(self) -> list[MetricsSample]:
        cfg = self.cfg
        for i in range(self.topology.n):
            self._schedule(self.rngs[i].uniform(cfg.min_ogmtime, cfg.max_ogmtime), CREATE, i)
        samples = []
        times = cfg.sample_times()
        k = 0
        while self.queue and self.queue[0][0] <= cfg.horizon:
            t, _, kind, node = heapq.heappop(self.queue)
            while k < len(times) and times[k] < t:
                samples.append(self.snapshot(times[k]))
                k += 1
            self._advance(t)
            self.events += 1
            if kind == CREATE:
                self._create(node)
            else:
                self._process(node)
        while k < len(times):
            samples.append(self.snapshot(times[k]))
            k += 1
        self._advance(cfg.horizon)
        return samples


@dataclass
class RunResult:
    run_index: int
    samples: list[MetricsSample]
    mean_occupancy: float
    wrapped: bool
    max_head_wait: float
    events: int


def run(params: ProtocolParams, topology: Topology, cfg: TimedConfig, run_index: int) -> list[MetricsSample]:
    return Simulation(params, topology, cfg, run_index).run()


def run_detailed(params: ProtocolParams, topology: Topology, cfg: TimedConfig, run_index: int) -> RunResult:
    sim = Simulation(params, topology, cfg, run_index)
    samples = sim.run()
    return RunResult(run_index, samples, sim.mean_occupancy(), sim.wrapped, sim.max_head_wait, sim.events)


MEAN_FIELDS = ("bidir_misses", "no_route", "best_hop_total", "route_errors", "avg_buffer")
MAX_FIELDS = ("max_buffer", "buffer_error_total")


def aggregate(runs: list[list[MetricsSample]]) -> list[dict]:
    """Per-sample-time mean over runs; buffer maximum and overflow count take the max instead."""
    out = []
    for column in zip(*runs):
        row = {"t": column[0].t}
        for name in MetricsSample.field_names()[1:]:
            values = [getattr(s, name) for s in column]
            row[name] = max(values) if name in MAX_FIELDS else sum(values) / len(values)
        out.append(row)
    return out


@dataclass
class BatchResult:
    details: list[RunResult]
    aggregate: list[dict]

    @property
    def runs(self) -> list[list[MetricsSample]]:
        return [d.samples for d in self.details]

    def at(self, t: float) -> list[MetricsSample]:
        """The sample at time ``t`` from every run."""
        return [next(s for s in d.samples if abs(s.t - t) < 1e-9) for d in self.details]

    def mean_occupancy(self) -> float:
        return sum(d.mean_occupancy for d in self.details) / len(self.details)


def _run_star(args) -> RunResult:
    return run_detailed(*args)


def run_batch(params: ProtocolParams, topology: Topology, cfg: TimedConfig, workers: int = 1) -> BatchResult:
    jobs = [(params, topology, cfg, r) for r in range(cfg.runs)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            details = list(pool.map(_run_star, jobs))
    else:
        details = [_run_star(j) for j in jobs]
    return BatchResult(details, aggregate([d.samples for d in details]))
