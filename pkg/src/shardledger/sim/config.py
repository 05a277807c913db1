"""Scenario configuration: ``key = value`` text files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

from ..orderer import BEHAVIORS, HONEST, SILENT

CONTRACTS = ("cscoin", "smet", "svote")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    seed: int = 1
    shards: int = 2
    nodes_per_shard: int = 4
    f: int = 1
    faults: tuple[tuple[int, int, str], ...] = ()  # (shard, node, behavior)
    min_delay: int = 1
    max_delay: int = 1
    drop: float = 0.0
    txs: int = 100
    inputs_per_tx: int = 1
    conflict_fraction: float = 0.0
    contract_mix: tuple[tuple[str, int], ...] = (("cscoin", 1),)
    submit_rate: int = 0  # transactions per round; 0 submits everything at round 0
    epoch: int = 16
    delta1: int = 4
    delta2: int = 8
    latency: int = 2
    capacity: int = 0  # orderer entries per shard per round; 0 is unbounded
    fee_min: int = 0
    max_rounds: int = 20000

    def __post_init__(self):
        def bad(msg):
            raise ConfigError(msg)

        if not 0 <= self.seed < 2**64:
            bad("seed must be a 64-bit unsigned integer")
        if self.shards < 1:
            bad("shards must be at least 1")
        if self.f < 0 or self.nodes_per_shard < 3 * self.f + 1:
            bad(f"nodes_per_shard={self.nodes_per_shard} < 3f+1 with f={self.f}")
        if self.min_delay < 1 or self.max_delay < self.min_delay:
            bad("delays must satisfy 1 <= min_delay <= max_delay")
        if not 0.0 <= self.drop < 1.0:
            bad("drop must be in [0, 1)")
        if self.txs < 0 or self.inputs_per_tx < 1:
            bad("txs must be >= 0 and inputs_per_tx >= 1")
        if not 0.0 <= self.conflict_fraction <= 1.0:
            bad("conflict_fraction must be in [0, 1]")
        if self.submit_rate < 0 or self.capacity < 0 or self.fee_min < 0:
            bad("submit_rate, capacity and fee_min must be non-negative")
        if self.epoch < 1 or self.delta1 < 1 or self.delta2 < 1 or self.latency < 1:
            bad("epoch, delta1, delta2 and latency must be positive")
        if self.max_rounds < 1:
            bad("max_rounds must be positive")
        if not self.contract_mix or any(c not in CONTRACTS or w < 0 for c, w in self.contract_mix):
            bad(f"contract_mix entries must be among {', '.join(CONTRACTS)} with non-negative weights")
        if sum(w for _, w in self.contract_mix) == 0:
            bad("contract_mix weights sum to zero")
        seen = set()
        for s, n, b in self.faults:
            if not (0 <= s < self.shards and 0 <= n < self.nodes_per_shard) or b not in BEHAVIORS:
                bad(f"bad fault placement {s}:{n}:{b}")
            if (s, n) in seen:
                bad(f"node {s}:{n} has two fault placements")
            seen.add((s, n))

    def behaviors(self, shard: int) -> tuple[str, ...]:
        out = [HONEST] * self.nodes_per_shard
        for s, n, b in self.faults:
            if s == shard:
                out[n] = b
        return tuple(out)

    def faulty(self, shard: int) -> int:
        return sum(b != HONEST for b in self.behaviors(shard))

    def dishonest_shards(self) -> list[int]:
        return [s for s in range(self.shards) if self.faulty(s) > self.f]

    def silent(self, shard: int, node: int) -> bool:
        return self.behaviors(shard)[node] == SILENT

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)

    def to_text(self) -> str:
        lines = []
        for fld in dataclasses.fields(self):
            lines.append(f"{fld.name} = {_render(fld.name, getattr(self, fld.name))}")
        return "\n".join(lines) + "\n"


def _render(key: str, value) -> str:
    if key == "faults":
        return ",".join(f"{s}:{n}:{b}" for s, n, b in value)
    if key == "contract_mix":
        return ",".join(f"{c}:{w}" for c, w in value)
    return str(value)


def _parse_value(key: str, raw: str, kind):
    try:
        if key == "faults":
            out = []
            for part in filter(None, (p.strip() for p in raw.split(","))):
                s, n, b = part.split(":")
                out.append((int(s), int(n), b.strip()))
            return tuple(out)
        if key == "contract_mix":
            out = []
            for part in filter(None, (p.strip() for p in raw.split(","))):
                name, _, w = part.partition(":")
                out.append((name.strip(), int(w) if w else 1))
            return tuple(out)
        if kind is float:
            return float(raw)
        return int(raw, 0)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}") from None


_FIELDS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}
_KINDS = {"drop": float, "conflict_fraction": float}


def parse_config(text: str) -> ScenarioConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, raw, _KINDS.get(key, int))
    return ScenarioConfig(**values)


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}") from None
    return parse_config(text)
