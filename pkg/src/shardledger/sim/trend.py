"""Throughput comparisons across scenario configurations."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .config import ScenarioConfig, load_config
from .runner import run_scenario


@dataclass(frozen=True)
class TrendPoint:
    name: str
    config: ScenarioConfig
    committed: int
    rounds: int
    throughput: float


def measure(name: str, cfg: ScenarioConfig) -> TrendPoint:
    r = run_scenario(cfg)
    return TrendPoint(name, cfg, len(r.committed), r.rounds, r.throughput())


def trend(points: list[TrendPoint]) -> str:
    if not points:
        return "no configurations\n"
    base = points[0].throughput or float("nan")
    lines = ["config\tshards\tinputs\tnodes\tcommitted\tthroughput\tratio"]
    for p in points:
        c = p.config
        lines.append(
            f"{p.name}\t{c.shards}\t{c.inputs_per_tx}\t{c.nodes_per_shard}\t{p.committed}\t"
            f"{p.throughput:.4f}\t{p.throughput / base:.3f}"
        )
    return "\n".join(lines) + "\n"


def trend_dir(path) -> str:
    files = sorted(Path(path).glob("*.conf"))
    return trend([measure(f.stem, load_config(f)) for f in files])
