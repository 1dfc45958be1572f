"""Static network shapes and hop distances."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .protocol import ConfigError

UNREACHABLE = -1


@dataclass(frozen=True)
class Topology:
    n: int
    adjacency: tuple[tuple[bool, ...], ...]
    dist: tuple[tuple[int, ...], ...] = field(repr=False, compare=False, default=())

    def __post_init__(self):
        if not self.dist:
            object.__setattr__(self, "dist", all_pairs_distance(self))

    def neighbors(self, i: int) -> tuple[int, ...]:
        return tuple(j for j, linked in enumerate(self.adjacency[i]) if linked)

    def degree(self, i: int) -> int:
        return sum(self.adjacency[i])

    def edges(self) -> list[tuple[int, int]]:
        return [(i, j) for i in range(self.n) for j in range(i + 1, self.n) if self.adjacency[i][j]]


def from_edges(n: int, edges: Iterable[tuple[int, int]]) -> Topology:
    if n < 1:
        raise ConfigError("topology", "need at least one node")
    adj = [[False] * n for _ in range(n)]
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise ConfigError("topology", f"edge ({i}, {j}) references a node outside 0..{n - 1}")
        if i == j:
            raise ConfigError("topology", f"self-loop on node {i}")
        adj[i][j] = adj[j][i] = True
    return Topology(n, tuple(tuple(row) for row in adj))


def ring(n: int) -> Topology:
    if n < 3:
        raise ConfigError("topology", "a ring needs at least 3 nodes")
    return from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def _grid_edges(w: int, h: int) -> list[tuple[int, int]]:
    edges = []
    for r in range(h):
        for c in range(w):
            i = r * w + c
            if c + 1 < w:
                edges.append((i, i + 1))
            if r + 1 < h:
                edges.append((i, i + w))
    return edges


def grid(w: int, h: int) -> Topology:
    if w < 2 or h < 2:
        raise ConfigError("topology", "grid sides must be >= 2")
    return from_edges(w * h, _grid_edges(w, h))


def grid_center(w: int, h: int) -> Topology:
    """Row-major ``w`` x ``h`` grid plus one extra node linked to the central cells.

    The extra node gets the highest id. For even sides it touches the four
    middle cells; an odd side contributes a single middle row/column.
    """
    if w < 2 or h < 2:
        raise ConfigError("topology", "grid sides must be >= 2")
    center = w * h
    cols = [w // 2 - 1, w // 2] if w % 2 == 0 else [w // 2]
    rows = [h // 2 - 1, h // 2] if h % 2 == 0 else [h // 2]
    spokes = [(center, r * w + c) for r in rows for c in cols]
    return from_edges(w * h + 1, _grid_edges(w, h) + spokes)


def load_edge_list(path: str | Path) -> Topology:
    """Read one ``i j`` pair per line; ``#`` starts a comment."""
    edges = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigError("topology", f"{path}:{lineno}: expected two ids, got {raw!r}")
        try:
            edges.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ConfigError("topology", f"{path}:{lineno}: non-integer id in {raw!r}") from None
    if not edges:
        raise ConfigError("topology", f"{path}: no edges")
    n = max(max(e) for e in edges) + 1
    return from_edges(n, edges)


def all_pairs_distance(t: Topology) -> tuple[tuple[int, ...], ...]:
    rows = []
    nbrs = [[j for j, linked in enumerate(t.adjacency[i]) if linked] for i in range(t.n)]
    for src in range(t.n):
        d = [UNREACHABLE] * t.n
        d[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if d[v] == UNREACHABLE:
                    d[v] = d[u] + 1
                    queue.append(v)
        rows.append(tuple(d))
    return tuple(rows)


def _ints(text: str, count: int, spec: str) -> list[int]:
    parts = text.split()
    try:
        values = [int(p) for p in parts]
    except ValueError:
        values = []
    if len(values) != count:
        raise ConfigError("topology", f"bad size in {spec!r}")
    return values


def parse_spec(spec: str) -> Topology:
    """Build from ``ring:4``, ``grid:4x4``, ``grid_center:4x4`` or ``custom:<path>``."""
    kind, sep, arg = spec.partition(":")
    if not sep:
        raise ConfigError("topology", f"expected kind:argument, got {spec!r}")
    if kind == "ring":
        return ring(_ints(arg, 1, spec)[0])
    if kind in ("grid", "grid_center"):
        w, h = _ints(arg.lower().replace("x", " "), 2, spec)
        return grid(w, h) if kind == "grid" else grid_center(w, h)
    if kind == "custom":
        return load_edge_list(arg)
    raise ConfigError("topology", f"unknown topology kind {kind!r}")
