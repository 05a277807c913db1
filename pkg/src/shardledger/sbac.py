"""Sharded byzantine atomic commit.

Each concerned shard sequences ``prepare(T)`` through its orderer, every
node signs a local decision and multicasts it to all nodes of the
concerned shards. Once a node holds f+1 matching signatures from every
shard (commit) or from any one shard (abort), the shard sequences
``accept(T)`` carrying those signatures and applies the outcome.

Cross-shard duties fall to the shard's designated node (index 0). The
others arm timers: a reminder re-sends their promise and hands any
decision they already hold to the designated node; a takeover lets every
node drive the transaction itself. All of these actions are idempotent
because the orderer absorbs duplicate submissions.
"""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass
from typing import Hashable

from .chain import (
    AbortedTx,
    AcceptRefused,
    AcceptSeen,
    ChainHeader,
    Checkpoint,
    CommittedTx,
    ObjectCreated,
    PrepareSeen,
    PromiseSeen,
    ShardDecision,
    head_message,
    seal_checkpoint,
    sign_head,
)
from .contracts.cscoin import fee_paid
from .crypto.signatures import KeyPair, verify
from .encoding import canonical_decode, encode_stream
from .messages import (
    AcceptForward,
    AcceptMsg,
    CreateObjectMsg,
    DecisionNotice,
    PreparedMsg,
    PreparedStatement,
    PrepareMsg,
    SignedPrepared,
    sign_statement,
    statement_valid,
)
from .model import Object, Transaction, iter_traces, tx_digest
from .orderer import EQUIVOCATOR, HONEST, LIAR, Orderer, SequencedEntry
from .shard import Decision, ShardStore, concerned_shards, shard_of
from .validity import AbortKind, AbortReason, CheckerRegistry, created_objects

CLIENT = "client"
BFTINIT = 0  # designated node of every shard


@dataclass(frozen=True)
class ProtocolConfig:
    K: int
    n: int
    f: int
    key_sets: tuple[tuple[bytes, ...], ...]
    delta1: int = 4
    delta2: int = 8
    fee_min: int = 0
    max_reminders: int = 64

    def __post_init__(self):
        if self.n < 3 * self.f + 1:
            raise ValueError(f"n={self.n} < 3f+1 with f={self.f}")
        if len(self.key_sets) != self.K or any(len(ks) != self.n for ks in self.key_sets):
            raise ValueError("one verify key per node of every shard")
        if self.delta1 < 1 or self.delta2 < 1:
            raise ValueError("timeouts must be positive")

    def nodes(self, shard: int) -> list[tuple[int, int]]:
        return [(shard, i) for i in range(self.n)]


class DecisionTracker:
    """Verified promises for one transaction and the thresholds over them."""

    def __init__(self, tx: bytes, shards: frozenset[int], f: int):
        self.tx = tx
        self.shards = shards
        self.f = f
        self.votes: dict[tuple[int, bool], dict[int, SignedPrepared]] = {}
        self._first: dict[tuple[int, int], SignedPrepared] = {}
        self.equivocations: list[tuple[SignedPrepared, SignedPrepared]] = []

    def add(self, sp: SignedPrepared) -> bool:
        """Record a promise already checked by the caller; False if known."""
        st = sp.statement
        if st.tx != self.tx or st.shard not in self.shards:
            raise ValueError("promise for another transaction or shard")
        bucket = self.votes.setdefault((st.shard, st.commit), {})
        if st.node in bucket:
            return False
        bucket[st.node] = sp
        first = self._first.setdefault((st.shard, st.node), sp)
        if first.statement.commit != st.commit:
            self.equivocations.append((first, sp))
        return True

    def lp(self, shard: int, commit: bool) -> bool:
        return len(self.votes.get((shard, commit), ())) >= self.f + 1

    def some_abort(self) -> bool:
        return any(self.lp(s, False) for s in self.shards)

    def all_commit(self) -> bool:
        return all(self.lp(s, True) for s in self.shards)

    @property
    def outcome(self) -> bool | None:
        # a single shard's abort threshold decides, whatever the others say
        if self.some_abort():
            return False
        if self.all_commit():
            return True
        return None

    def evidence(self, commit: bool) -> tuple[SignedPrepared, ...]:
        """The f+1 lowest-index signers per shard backing ``commit``."""
        if commit:
            shards = sorted(self.shards)
        else:
            shards = [min(s for s in self.shards if self.lp(s, False))]
        out = []
        for s in shards:
            bucket = self.votes[(s, commit)]
            out.extend(bucket[i] for i in sorted(bucket)[: self.f + 1])
        return tuple(out)


def evidence_problem(accept: AcceptMsg, cfg: ProtocolConfig) -> str | None:
    """Why ``accept`` is not backed by its evidence, or None if it is."""
    if not isinstance(accept, AcceptMsg) or not isinstance(accept.tx, Transaction):
        return "malformed accept"
    if not isinstance(accept.commit, bool) or not isinstance(accept.evidence, tuple):
        return "malformed accept"
    try:
        phi = concerned_shards(accept.tx, cfg.K)
    except Exception:
        return "transaction has no concerned shard"
    d = tx_digest(accept.tx)
    signers: dict[int, set[int]] = {}
    for sp in accept.evidence:
        if not isinstance(sp, SignedPrepared) or not isinstance(sp.statement, PreparedStatement):
            return "malformed promise"
        st = sp.statement
        if st.tx != d:
            return "promise for another transaction"
        if st.shard not in phi:
            return f"promise from unconcerned shard {st.shard}"
        if st.commit is not accept.commit:
            return "promise contradicts the decision"
        if not statement_valid(sp, cfg.key_sets):
            return f"bad signature from {st.shard}/{st.node}"
        signers.setdefault(st.shard, set()).add(st.node)
    need = cfg.f + 1
    if accept.commit:
        short = [s for s in sorted(phi) if len(signers.get(s, ())) < need]
        if short:
            return f"shard {short[0]} below the commit threshold"
    elif not any(len(v) >= need for v in signers.values()):
        return "no shard reached the abort threshold"
    return None


def create_problem(msg: CreateObjectMsg, shard: int, cfg: ProtocolConfig) -> str | None:
    """Why ``msg`` does not justify creating its object on ``shard``."""
    if not isinstance(msg, CreateObjectMsg) or not isinstance(msg.object, Object):
        return "malformed create"
    if shard_of(msg.object.id, cfg.K) != shard:
        return "object managed elsewhere"
    if not isinstance(msg.accept, AcceptMsg) or msg.accept.commit is not True:
        return "create without a commit"
    problem = evidence_problem(msg.accept, cfg)
    if problem:
        return problem
    if shard in concerned_shards(msg.accept.tx, cfg.K):
        return "concerned shard creates its own outputs"
    if msg.object not in created_objects(msg.accept.tx):
        return "object not created by the transaction"
    return None


def decide(store: ShardStore, tx: Transaction, reg: CheckerRegistry, fee_min: int = 0) -> Decision:
    """The honest local decision, including the optional fee floor."""
    d = store.local_decision(tx, reg)
    if d.commit and fee_min > 0:
        paid = sum(fee_paid(t) for t in iter_traces(tx))
        if paid < fee_min:
            return Decision.abort(AbortKind.INSUFFICIENT_FEE, f"{paid} < {fee_min}")
    return d


def pool_key(msg) -> Hashable | None:
    """Orderer pool key used by nodes to avoid redundant submissions."""
    if isinstance(msg, PrepareMsg):
        return ("prepare", tx_digest(msg.tx))
    if isinstance(msg, AcceptMsg):
        return ("accept", tx_digest(msg.tx))
    if isinstance(msg, CreateObjectMsg):
        return ("create", msg.object.id)
    return None


def _fabricated() -> AbortReason:
    return AbortReason(AbortKind.CHECKER_REJECTED, "fabricated")


class Node:
    def __init__(
        self,
        shard: int,
        index: int,
        key: KeyPair,
        cfg: ProtocolConfig,
        registry: CheckerRegistry,
        orderer: Orderer,
        genesis=(),
        behavior: str = HONEST,
        strict: bool = True,
    ):
        self.shard = shard
        self.index = index
        self.addr = (shard, index)
        self.key = key
        self.cfg = cfg
        self.registry = registry
        self.orderer = orderer
        self.behavior = behavior
        self.genesis = tuple(sorted((o for o in genesis if shard_of(o.id, cfg.K) == shard), key=lambda o: o.id))
        self.store = ShardStore(shard, cfg.K, self.genesis)
        self.store.strict = strict
        self.outbox: list[tuple[object, object]] = []
        self.trackers: dict[bytes, DecisionTracker] = {}
        self.txs: dict[bytes, Transaction] = {}
        self.prepared: dict[bytes, list[tuple[tuple[int, int], PreparedMsg]]] = {}
        self.decided: dict[bytes, AcceptMsg] = {}
        self.remote_creates: dict[bytes, list[Object]] = {}
        self.acting: set[bytes] = set()
        self.suspect = False
        self.reminders: Counter = Counter()
        self._timers: list[tuple[int, int, str, bytes]] = []
        self._timer_seq = 0
        self._phi: dict[bytes, frozenset[int] | None] = {}
        self.entries: list = []
        self.checkpoints: list[Checkpoint] = []
        self.head_sigs: dict[int, dict[int, bytes]] = {}
        self.stats: Counter = Counter()

    # -- helpers -----------------------------------------------------------

    @property
    def designated(self) -> bool:
        return self.index == BFTINIT

    def _send(self, dest, msg) -> None:
        self.outbox.append((dest, msg))

    def drain(self) -> list:
        out, self.outbox = self.outbox, []
        return out

    def _arm(self, round_: int, kind: str, d: bytes) -> None:
        self._timer_seq += 1
        heapq.heappush(self._timers, (round_, self._timer_seq, kind, d))

    def concerned(self, tx: Transaction) -> frozenset[int] | None:
        d = tx_digest(tx)
        if d not in self._phi:
            try:
                self._phi[d] = concerned_shards(tx, self.cfg.K)
            except Exception:
                self._phi[d] = None
        return self._phi[d]

    def _is_mine(self, tx: Transaction) -> bool:
        phi = self.concerned(tx)
        return phi is not None and self.shard in phi

    # -- network -----------------------------------------------------------

    def receive(self, round_: int, msg) -> None:
        if isinstance(msg, PrepareMsg):
            self._request_prepare(round_, msg.tx)
        elif isinstance(msg, PreparedMsg):
            self._on_prepared(round_, msg)
        elif isinstance(msg, AcceptForward):
            self._on_forward(round_, msg.accept)
        elif isinstance(msg, CreateObjectMsg):
            self._on_create_request(round_, msg)
        else:
            self.stats["unknown_message"] += 1

    def _request_prepare(self, round_: int, tx: Transaction) -> None:
        if not isinstance(tx, Transaction) or not self._is_mine(tx):
            return
        d = tx_digest(tx)
        if d in self.prepared or d in self.decided or self.orderer.has_pending(("prepare", d)):
            return
        self.orderer.submit(round_, PrepareMsg(tx))

    def _on_prepared(self, round_: int, msg: PreparedMsg) -> None:
        sp, tx = msg.signed, msg.tx
        if not isinstance(tx, Transaction) or not isinstance(sp, SignedPrepared):
            self.stats["bad_prepared"] += 1
            return
        st = sp.statement
        d = tx_digest(tx)
        phi = self.concerned(tx)
        if st.tx != d or phi is None or self.shard not in phi or st.shard not in phi:
            self.stats["bad_prepared"] += 1
            return
        if d in self.decided:
            # a straggler still waiting: hand it the decision
            if st.shard != self.shard:
                self._send((st.shard, st.node), AcceptForward(self.decided[d]))
            return
        if not statement_valid(sp, self.cfg.key_sets):
            self.stats["bad_signature"] += 1
            return
        tracker = self.trackers.get(d)
        if tracker is None:
            tracker = self.trackers[d] = DecisionTracker(d, phi, self.cfg.f)
        self.txs.setdefault(d, tx)
        if tracker.add(sp):
            if d not in self.prepared:
                self._request_prepare(round_, tx)  # implicit prepare
            self._maybe_accept(round_, d)

    def _maybe_accept(self, round_: int, d: bytes) -> None:
        if d in self.decided:
            return
        tracker = self.trackers.get(d)
        if tracker is None or tracker.outcome is None:
            return
        if not (self.designated or self.suspect or d in self.acting):
            return
        if self.orderer.has_pending(("accept", d)):
            return
        commit = tracker.outcome
        self.orderer.submit(round_, AcceptMsg(self.txs[d], commit, tracker.evidence(commit)))

    def _on_forward(self, round_: int, accept: AcceptMsg) -> None:
        if not isinstance(accept, AcceptMsg) or not isinstance(accept.tx, Transaction):
            self.stats["bad_forward"] += 1
            return
        d = tx_digest(accept.tx)
        if d in self.decided or not self._is_mine(accept.tx) or self.orderer.has_pending(("accept", d)):
            return
        if evidence_problem(accept, self.cfg):
            self.stats["bad_forward"] += 1
            return
        self.orderer.submit(round_, accept)

    def _on_create_request(self, round_: int, msg: CreateObjectMsg) -> None:
        oid = msg.object.id
        if not self.store.manages(oid) or oid in self.store.records:
            return
        if self.orderer.has_pending(("create", oid)):
            return
        if create_problem(msg, self.shard, self.cfg):
            self.stats["bad_create"] += 1
            return
        self.orderer.submit(round_, msg)

    # -- sequenced entries -------------------------------------------------

    def on_entry(self, round_: int, entry: SequencedEntry) -> None:
        m = entry.obj if entry.obj is not None else canonical_decode(entry.message)
        if isinstance(m, PrepareMsg):
            self._sequenced_prepare(round_, m.tx)
        elif isinstance(m, AcceptMsg):
            self._sequenced_accept(round_, m)
        elif isinstance(m, CreateObjectMsg):
            self._sequenced_create(m)

    def _sequenced_prepare(self, round_: int, tx: Transaction) -> None:
        if not isinstance(tx, Transaction) or not self._is_mine(tx):
            return
        d = tx_digest(tx)
        if d in self.prepared or d in self.decided:
            return
        phi = self.concerned(tx)
        decision = decide(self.store, tx, self.registry, self.cfg.fee_min)
        self.entries.append(PrepareSeen(tx))
        self.txs.setdefault(d, tx)

        commit, reason = decision.commit, decision.reason
        if self.behavior == LIAR:
            commit, reason = not commit, (_fabricated() if commit else None)
        if commit:
            self.store.lock(d, tx)
        signed = sign_statement(self.key, PreparedStatement(d, commit, reason, self.shard, self.index))
        dests = [a for s in sorted(phi) for a in self.cfg.nodes(s)]
        if self.behavior == EQUIVOCATOR:
            other = sign_statement(
                self.key,
                PreparedStatement(d, not commit, _fabricated() if commit else None, self.shard, self.index),
            )
            msgs = [(a, PreparedMsg(signed if a[1] % 2 == 0 else other, tx)) for a in dests]
        else:
            msgs = [(a, PreparedMsg(signed, tx)) for a in dests]
        self.prepared[d] = msgs
        for a, m in msgs:
            self._send(a, m)
        self._arm(round_ + self.cfg.delta1, "remind", d)
        self._arm(round_ + self.cfg.delta1 + self.cfg.delta2, "takeover", d)

    def _sequenced_accept(self, round_: int, accept: AcceptMsg) -> None:
        if not isinstance(accept, AcceptMsg) or not isinstance(accept.tx, Transaction):
            return
        d = tx_digest(accept.tx)
        if d in self.decided or not self._is_mine(accept.tx):
            return
        if evidence_problem(accept, self.cfg):
            self.entries.append(AcceptRefused(accept))
            self.stats["refused_accept"] += 1
            return
        for sp in accept.evidence:
            self.entries.append(PromiseSeen(sp))
        self.entries.append(AcceptSeen(accept.tx, accept.commit))
        self.decided[d] = accept
        self.txs.setdefault(d, accept.tx)
        if accept.commit:
            self.entries.append(CommittedTx(accept.tx))
            phi = self.concerned(accept.tx)
            remote = self.store.consume_and_create(d, accept.tx)
            self.remote_creates[d] = [o for o in remote if shard_of(o.id, self.cfg.K) not in phi]
        else:
            first = accept.evidence[0].statement
            self.entries.append(AbortedTx(d, first.reason, first.shard))
            self.store.release(d, accept.tx)
        if self.designated or self.suspect:
            self._announce(d)
        else:
            self._arm(round_ + self.cfg.delta1 + self.cfg.delta2, "follow", d)

    def _sequenced_create(self, msg: CreateObjectMsg) -> None:
        if not isinstance(msg, CreateObjectMsg) or not isinstance(msg.object, Object):
            return
        if msg.object.id in self.store.records or create_problem(msg, self.shard, self.cfg):
            return
        self.entries.append(ObjectCreated(msg))
        self.store.create(msg.object)

    def _announce(self, d: bytes, notify: bool = True) -> None:
        """Decision to the client, and output objects to their shards."""
        accept = self.decided[d]
        if notify:
            self._send(CLIENT, DecisionNotice(d, accept.commit, self.shard, self.index))
        for o in self.remote_creates.get(d, ()):
            msg = CreateObjectMsg(o, accept)
            for a in self.cfg.nodes(shard_of(o.id, self.cfg.K)):
                self._send(a, msg)

    # -- timers ------------------------------------------------------------

    def fire_timers(self, round_: int) -> None:
        while self._timers and self._timers[0][0] <= round_:
            _, _, kind, d = heapq.heappop(self._timers)
            if kind == "remind":
                self._remind(round_, d)
            elif kind == "takeover":
                self._takeover(round_, d)
            elif kind == "follow":
                # creations are re-sent regardless: a lost CreateObject has no other retry
                self._announce(d, notify=self.suspect)

    def _remind(self, round_: int, d: bytes) -> None:
        if d in self.decided or self.reminders[d] >= self.cfg.max_reminders:
            return
        self.reminders[d] += 1
        for a, m in self.prepared.get(d, ()):
            if a != self.addr:
                self._send(a, m)
        tracker = self.trackers.get(d)
        if tracker is not None and tracker.outcome is not None and not self.designated:
            commit = tracker.outcome
            self._send((self.shard, BFTINIT), AcceptForward(AcceptMsg(self.txs[d], commit, tracker.evidence(commit))))
        self._arm(round_ + self.cfg.delta1, "remind", d)

    def _takeover(self, round_: int, d: bytes) -> None:
        if d in self.decided:
            return
        self.acting.add(d)
        if not self.designated:
            self.suspect = True
        self._maybe_accept(round_, d)

    def busy(self) -> bool:
        """Whether any armed timer can still act."""
        for _, _, kind, d in self._timers:
            if kind == "follow":
                return True
            elif d not in self.decided and self.reminders[d] < self.cfg.max_reminders:
                return True
        return False

    def drop_idle_timers(self) -> None:
        if not self.busy():
            self._timers.clear()

    # -- checkpoints -------------------------------------------------------

    def seal(self) -> tuple[Checkpoint, bytes]:
        prev = self.checkpoints[-1] if self.checkpoints else None
        cp = seal_checkpoint(self.shard, self.entries, prev)
        self.entries = []
        self.checkpoints.append(cp)
        sig = sign_head(self.key, cp)
        self.head_sigs.setdefault(cp.seq_no, {})[self.index] = sig
        return cp, sig

    def accept_head_signature(self, node: int, seq_no: int, head: bytes, sig: bytes) -> bool:
        if not 0 <= seq_no < len(self.checkpoints) or self.checkpoints[seq_no].head != head:
            return False
        if not verify(self.cfg.key_sets[self.shard][node], head_message(self.shard, seq_no, head), sig):
            return False
        self.head_sigs.setdefault(seq_no, {})[node] = sig
        return True

    def header(self) -> ChainHeader:
        return ChainHeader(self.shard, self.index, self.cfg.K, self.cfg.f, self.cfg.key_sets, self.genesis, self.cfg.fee_min)

    def export_chain(self) -> bytes:
        items: list = [self.header()]
        for cp in self.checkpoints:
            sigs = tuple(sorted(self.head_sigs.get(cp.seq_no, {}).items()))
            items.append((cp, ShardDecision(cp.shard, cp.seq_no, cp.head, sigs)))
        return encode_stream(items)


class UnknownContractError(ValueError):
    pass


def client_submit(tx: Transaction, cfg: ProtocolConfig, registry: CheckerRegistry):
    """Digest of ``tx`` and its Prepare messages, addressed to f+1 nodes per concerned shard."""
    for t in iter_traces(tx):
        if t.contract not in registry:
            raise UnknownContractError(f"no checker for contract {t.contract.hex()}")
    phi = concerned_shards(tx, cfg.K)
    msg = PrepareMsg(tx)
    return tx_digest(tx), [((s, i), msg) for s in sorted(phi) for i in range(cfg.f + 1)]
