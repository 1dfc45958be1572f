"""Scenario files: flat ``key = value`` lines, ``#`` comments.

Example::

    topology = grid_center:4x4
    interpretation = literal
    runs = 100

Unknown keys are rejected so typos do not silently fall back to defaults.
"""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from .explorer import DEFAULT_STATE_CAP
from .protocol import ConfigError, Interpretation, ProtocolParams
from .sim import TimedConfig
from .topology import Topology, parse_spec


@dataclass(frozen=True)
class ScenarioConfig:
    topology: str = "ring:4"
    interpretation: str = "literal"
    max_sqn: int = 15
    ttl_max: int = 10
    window_size: int = 5
    bi_link_timeout: int = 5
    buffer_capacity: int = 64
    # explore
    budgets: Optional[tuple[int, ...]] = None
    reduction: bool = True
    state_cap: int = DEFAULT_STATE_CAP
    # simulate
    min_ogmtime: float = 19.0
    max_ogmtime: float = 20.0
    max_response: float = 1.0
    horizon: float = 255.0
    runs: int = 100
    seed: int = 1
    sample_period: float = 5.0
    urgent_internal: bool = True
    workers: int = 1
    # output
    output: str = "out"
    format: str = "csv"
    base_dir: Path = Path(".")

    def build_topology(self) -> Topology:
        spec = self.topology
        if spec.startswith("custom:"):
            path = Path(spec.split(":", 1)[1])
            if not path.is_absolute():
                path = self.base_dir / path
            spec = f"custom:{path}"
        return parse_spec(spec)

    def protocol_params(self, n_nodes: int) -> ProtocolParams:
        try:
            interp = Interpretation(self.interpretation)
        except ValueError:
            raise ConfigError("interpretation", f"expected literal or alternative, got {self.interpretation!r}") from None
        return ProtocolParams(
            n_nodes=n_nodes,
            max_sqn=self.max_sqn,
            ttl_max=self.ttl_max,
            window_size=self.window_size,
            bi_link_timeout=self.bi_link_timeout,
            buffer_capacity=self.buffer_capacity,
            interpretation=interp,
        )

    def timed_config(self) -> TimedConfig:
        return TimedConfig(
            min_ogmtime=self.min_ogmtime,
            max_ogmtime=self.max_ogmtime,
            max_response=self.max_response,
            horizon=self.horizon,
            runs=self.runs,
            seed=self.seed,
            sample_period=self.sample_period,
            urgent_internal=self.urgent_internal,
        )

    def validate(self) -> tuple[ProtocolParams, Topology]:
        """Check every invariant up front; raises :class:`ConfigError` naming the field."""
        topo = self.build_topology()
        params = self.protocol_params(topo.n)
        self.timed_config()
        if self.budgets is not None:
            if len(self.budgets) != topo.n:
                raise ConfigError("budgets", f"need one budget per node ({topo.n}), got {len(self.budgets)}")
            if any(b < 0 for b in self.budgets):
                raise ConfigError("budgets", "budgets must be >= 0")
        if self.format not in ("csv", "json"):
            raise ConfigError("format", f"expected csv or json, got {self.format!r}")
        if self.state_cap < 1:
            raise ConfigError("state_cap", "must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        return params, topo

    def explore_budgets(self, n: int) -> tuple[int, ...]:
        return self.budgets if self.budgets is not None else (1,) * n


_FIELDS = {f.name: f for f in fields(ScenarioConfig) if f.name != "base_dir"}


def _convert(key: str, raw: str):
    default = getattr(ScenarioConfig, key)
    kind = _FIELDS[key].type
    try:
        if key == "budgets":
            return tuple(int(x) for x in raw.replace(",", " ").split())
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("true", "1", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {kind}") from None
    return raw


def parse(text: str, base_dir: Path | str = ".") -> ScenarioConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(key or f"line {lineno}", f"line {lineno}: expected key = value")
        if key not in _FIELDS:
            raise ConfigError(key, f"line {lineno}: unknown key")
        values[key] = _convert(key, value.strip())
    return ScenarioConfig(base_dir=Path(base_dir), **values)


def load(path: Path | str) -> ScenarioConfig:
    path = Path(path)
    return parse(path.read_text(), path.parent)


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def serialize(cfg: ScenarioConfig) -> str:
    """Write every set field; ``budgets`` is omitted when unset."""
    lines = []
    for name in _FIELDS:
        value = getattr(cfg, name)
        if value is None:
            continue
        lines.append(f"{name} = {_render(value)}")
    return "\n".join(lines) + "\n"


def with_overrides(cfg: ScenarioConfig, **overrides) -> ScenarioConfig:
    return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
