"""Round-driven simulation of a sharded deployment."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from ..contracts import cscoin, default_registry, system_genesis
from ..crypto.signatures import keygen
from ..messages import AcceptMsg, DecisionNotice
from ..model import ActiveSet, Object, Transaction, tx_digest
from ..orderer import LIAR, Orderer, OrdererConfig
from ..sbac import CLIENT, Node, ProtocolConfig, client_submit, pool_key
from ..validity import AbortReason, CheckerRegistry, validate_transaction
from .config import ScenarioConfig
from .network import Network
from .workload import Workload, build_workload

METRICS_HEADER = "round,submitted,committed,aborted,inflight,messages"


@dataclass
class TxRecord:
    digest: bytes
    tx: Transaction
    submitted: int
    decided: int | None = None
    commit: bool | None = None
    reason: str = ""


@dataclass
class RunResult:
    config: ScenarioConfig
    rounds: int
    records: dict[bytes, TxRecord]
    metrics: list[tuple[int, int, int, int, int, int]]
    chains: dict[tuple[int, int], bytes]
    active: dict[bytes, Object]  # union of the shards' final active objects
    workload: Workload
    genesis: list[Object]
    network: dict[str, int]
    stats: Counter
    notices: int = 0
    oracle_divergences: list[str] = field(default_factory=list)

    @property
    def committed(self) -> list[TxRecord]:
        return [r for r in self.records.values() if r.commit is True]

    @property
    def aborted(self) -> list[TxRecord]:
        return [r for r in self.records.values() if r.commit is False]

    @property
    def undecided(self) -> list[TxRecord]:
        return [r for r in self.records.values() if r.decided is None]

    def latencies(self) -> list[int]:
        return sorted(r.decided - r.submitted for r in self.records.values() if r.decided is not None)

    def throughput(self) -> float:
        """Committed transactions per round, first submission to last decision."""
        done = [r.decided for r in self.records.values() if r.decided is not None]
        if not done:
            return 0.0
        start = min(r.submitted for r in self.records.values())
        return len(self.committed) / (max(done) - start + 1)

    def supply(self) -> int:
        return sum(cscoin.balance_of(o) for o in self.active.values() if cscoin.SPEC.is_type(o, "Account"))

    def summary(self) -> str:
        lat = self.latencies()
        p95 = lat[max(0, math.ceil(0.95 * len(lat)) - 1)] if lat else 0
        reasons = Counter(r.reason for r in self.aborted)
        lines = [
            "[summary]",
            f"seed = {self.config.seed}",
            f"shards = {self.config.shards}",
            f"nodes_per_shard = {self.config.nodes_per_shard}",
            f"rounds = {self.rounds}",
            f"submitted = {len(self.records)}",
            f"committed = {len(self.committed)}",
            f"aborted = {len(self.aborted)}",
            f"undecided = {len(self.undecided)}",
        ]
        lines += [f"aborted.{k} = {v}" for k, v in sorted(reasons.items())]
        lines += [
            f"latency_mean = {sum(lat) / len(lat):.3f}" if lat else "latency_mean = 0",
            f"latency_p95 = {p95}",
            f"throughput = {self.throughput():.4f}",
            f"messages = {self.network['sent']}",
            f"delivered = {self.network['delivered']}",
            f"dropped = {self.network['dropped']}",
            f"supply = {self.supply()} of {self.workload.supply}",
            "oracle = " + ("skipped (dishonest shard)" if self.config.dishonest_shards()
                           else f"{len(self.oracle_divergences)} divergences"),
        ]
        return "\n".join(lines) + "\n"

    def metrics_csv(self) -> str:
        rows = [METRICS_HEADER] + [",".join(map(str, row)) for row in self.metrics]
        return "\n".join(rows) + "\n"

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        (out / "chains").mkdir(parents=True, exist_ok=True)
        (out / "metrics.csv").write_text(self.metrics_csv())
        (out / "summary.txt").write_text(self.summary())
        (out / "config.txt").write_text(self.config.to_text())
        for (s, i), data in sorted(self.chains.items()):
            (out / "chains" / f"shard{s}-node{i}.chain").write_bytes(data)


def node_key(seed: int, shard: int, node: int):
    return keygen(b"node" + seed.to_bytes(8, "big") + shard.to_bytes(4, "big") + node.to_bytes(4, "big"))


class Simulation:
    def __init__(self, cfg: ScenarioConfig, registry: CheckerRegistry | None = None):
        self.cfg = cfg
        self.registry = registry or default_registry()
        K, n = cfg.shards, cfg.nodes_per_shard
        keys = {(s, i): node_key(cfg.seed, s, i) for s in range(K) for i in range(n)}
        key_sets = tuple(tuple(keys[(s, i)].verify_key for i in range(n)) for s in range(K))
        self.protocol = ProtocolConfig(K, n, cfg.f, key_sets, cfg.delta1, cfg.delta2, cfg.fee_min)
        self.workload = build_workload(cfg)
        self.genesis = system_genesis(cfg.seed.to_bytes(8, "big")) + self.workload.genesis
        self.network = Network(random.Random(cfg.seed), cfg.min_delay, cfg.max_delay, cfg.drop)
        self.orderers = [
            Orderer(s, OrdererConfig(n, cfg.f, cfg.behaviors(s), cfg.latency, cfg.capacity or None), key=pool_key)
            for s in range(K)
        ]
        dishonest = set(cfg.dishonest_shards())
        self.nodes: dict[tuple[int, int], Node] = {}
        for s in range(K):
            for i, b in enumerate(cfg.behaviors(s)):
                if cfg.silent(s, i):
                    continue
                self.nodes[(s, i)] = Node(
                    s, i, keys[(s, i)], self.protocol, self.registry, self.orderers[s], self.genesis,
                    behavior=b, strict=s not in dishonest and b != LIAR,
                )
        self.records: dict[bytes, TxRecord] = {}
        self.notices = 0

    def _flush(self, round_: int, node: Node) -> None:
        for dest, msg in node.drain():
            self.network.send(round_, node.addr, dest, msg, lossy=dest != CLIENT)

    def _observe(self, round_: int, shard_nodes: list[Node], accept: AcceptMsg) -> None:
        d = tx_digest(accept.tx)
        rec = self.records.get(d)
        if rec is None or rec.decided is not None or not shard_nodes or d not in shard_nodes[0].decided:
            return
        final = shard_nodes[0].decided[d]
        rec.decided, rec.commit = round_, final.commit
        if not final.commit:
            reason = final.evidence[0].statement.reason
            rec.reason = reason.kind if isinstance(reason, AbortReason) else "Unspecified"

    def _quiet(self) -> bool:
        return (
            self.network.pending == 0
            and all(o.pending_count == 0 for o in self.orderers)
            and not any(n.busy() for n in self.nodes.values())
        )

    def run(self) -> RunResult:
        cfg = self.cfg
        by_round: dict[int, list[Transaction]] = {}
        for r, tx in self.workload.schedule:
            by_round.setdefault(r, []).append(tx)
        last_submit = max(by_round, default=0)
        shard_nodes = [[self.nodes[(s, i)] for i in range(cfg.nodes_per_shard) if (s, i) in self.nodes]
                       for s in range(cfg.shards)]
        metrics = []
        sealed_through = -1
        r = 0
        for r in range(cfg.max_rounds):
            for tx in by_round.get(r, ()):
                d, sends = client_submit(tx, self.protocol, self.registry)
                if d in self.records:
                    continue
                self.records[d] = TxRecord(d, tx, r)
                for dest, msg in sends:
                    self.network.send(r, CLIENT, dest, msg, lossy=False)

            for dest, msg in self.network.due(r):
                if dest == CLIENT:
                    self.notices += isinstance(msg, DecisionNotice)
                    continue
                node = self.nodes.get(dest)
                if node is not None:
                    node.receive(r, msg)
                    self._flush(r, node)

            for s, orderer in enumerate(self.orderers):
                for entry in orderer.step(r):
                    for node in shard_nodes[s]:
                        node.on_entry(r, entry)
                        self._flush(r, node)
                    if isinstance(entry.obj, AcceptMsg):
                        self._observe(r, shard_nodes[s], entry.obj)

            for node in self.nodes.values():
                node.fire_timers(r)
                self._flush(r, node)

            if r % cfg.epoch == cfg.epoch - 1:
                self._seal(shard_nodes)
                sealed_through = r

            assert self.network.balanced(), "message accounting out of balance"
            committed = sum(rec.commit is True for rec in self.records.values())
            aborted = sum(rec.commit is False for rec in self.records.values())
            metrics.append((r, len(self.records), committed, aborted,
                            len(self.records) - committed - aborted, self.network.sent))
            if r >= last_submit and sealed_through == r and self._quiet():
                break
        if sealed_through != r:
            self._seal(shard_nodes)

        result = RunResult(
            config=cfg,
            rounds=r + 1,
            records=self.records,
            metrics=metrics,
            chains={addr: node.export_chain() for addr, node in sorted(self.nodes.items())},
            active=self.final_active(shard_nodes),
            workload=self.workload,
            genesis=self.genesis,
            network={"sent": self.network.sent, "delivered": self.network.delivered,
                     "dropped": self.network.dropped, "pending": self.network.pending},
            stats=sum((n.stats for n in self.nodes.values()), Counter()),
            notices=self.notices,
        )
        if not cfg.dishonest_shards():
            result.oracle_divergences = validity_oracle(result, self.registry)
        return result

    def _seal(self, shard_nodes: list[list[Node]]) -> None:
        for nodes in shard_nodes:
            sealed = [(node, *node.seal()) for node in nodes]
            # head signatures are exchanged inside the shard directly
            for node in nodes:
                for other, cp, sig in sealed:
                    if other is not node:
                        node.accept_head_signature(other.index, cp.seq_no, cp.head, sig)

    def final_active(self, shard_nodes: list[list[Node]]) -> dict[bytes, Object]:
        """Union over shards of an honest node's active objects."""
        out: dict[bytes, Object] = {}
        for nodes in shard_nodes:
            honest = [n for n in nodes if n.behavior != LIAR] or nodes
            if honest:
                out.update(honest[0].store.active_objects())
        return out


def validity_oracle(result: RunResult, registry: CheckerRegistry) -> list[str]:
    """Replay commits in global commit order; compare with the shards' final state."""
    alpha = ActiveSet(result.genesis)
    problems = []
    for rec in sorted(result.committed, key=lambda r: (r.decided, r.digest)):
        nxt = validate_transaction(rec.tx, alpha, registry)
        if isinstance(nxt, AbortReason):
            problems.append(f"{rec.digest.hex()}: {nxt}")
            continue
        alpha = nxt
    expected = {o.id: o for o in alpha.objects()}
    for oid in sorted(set(expected) | set(result.active)):
        if expected.get(oid) != result.active.get(oid):
            where = "missing from shards" if oid not in result.active else "unexpected in shards"
            if oid in expected and oid in result.active:
                where = "content differs"
            problems.append(f"{oid.hex()}: {where}")
    return problems


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    return Simulation(cfg).run()
