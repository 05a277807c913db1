import pytest
from toy import COIN, spend, toy_registry

from shardledger.chain import AcceptRefused, ObjectCreated
from shardledger.crypto.signatures import keygen
from shardledger.messages import AcceptMsg, PreparedStatement, sign_statement
from shardledger.model import Transaction, build_trace, genesis_object, tx_digest
from shardledger.orderer import SILENT, Orderer, OrdererConfig
from shardledger.sbac import (
    CLIENT,
    DecisionTracker,
    Node,
    ProtocolConfig,
    UnknownContractError,
    client_submit,
    evidence_problem,
    pool_key,
)
from shardledger.shard import shard_of
from shardledger.sim import ScenarioConfig, run_scenario
from shardledger.validity import AbortKind, AbortReason

REG = toy_registry()


def _keys(K, n):
    return {(s, i): keygen(b"k%d.%d" % (s, i)) for s in range(K) for i in range(n)}


def _cfg(K=2, n=4, f=1, keys=None):
    keys = keys or _keys(K, n)
    return ProtocolConfig(K, n, f, tuple(tuple(keys[(s, i)].verify_key for i in range(n)) for s in range(K))), keys


def _promise(keys, d, shard, node, commit):
    reason = None if commit else AbortReason(AbortKind.LOCKED_OBJECT)
    return sign_statement(keys[(shard, node)], PreparedStatement(d, commit, reason, shard, node))


def coin_on(shard, K, seed=b"sb"):
    return next(o for o in (genesis_object(seed, i, COIN, b"") for i in range(1000)) if shard_of(o.id, K) == shard)


def _two_shard_tx(K=2):
    a, b = coin_on(0, K), coin_on(1, K)
    return Transaction((spend([a, b]),), (a, b)), (a, b)


def test_tracker_thresholds():
    _, keys = _cfg()
    d = b"\x01" * 32
    t = DecisionTracker(d, frozenset({0, 1}), 1)
    t.add(_promise(keys, d, 0, 0, True))
    assert t.outcome is None and not t.lp(0, True)
    t.add(_promise(keys, d, 0, 1, True))
    assert t.lp(0, True) and t.outcome is None
    t.add(_promise(keys, d, 1, 2, True))
    t.add(_promise(keys, d, 1, 3, True))
    assert t.outcome is True
    assert [(p.statement.shard, p.statement.node) for p in t.evidence(True)] == [(0, 0), (0, 1), (1, 2), (1, 3)]


def test_one_shard_abort_decides():
    _, keys = _cfg()
    d = b"\x02" * 32
    t = DecisionTracker(d, frozenset({0, 1}), 1)
    for i in range(4):
        t.add(_promise(keys, d, 0, i, True))
    t.add(_promise(keys, d, 1, 0, False))
    assert t.outcome is None
    t.add(_promise(keys, d, 1, 1, False))
    assert t.outcome is False and len(t.evidence(False)) == 2


def test_tracker_counts_each_node_once_and_flags_equivocation():
    _, keys = _cfg()
    d = b"\x03" * 32
    t = DecisionTracker(d, frozenset({0}), 1)
    p = _promise(keys, d, 0, 0, True)
    assert t.add(p) and not t.add(p)
    assert not t.lp(0, True)
    t.add(_promise(keys, d, 0, 0, False))
    assert len(t.equivocations) == 1
    with pytest.raises(ValueError):
        t.add(_promise(keys, b"\x04" * 32, 0, 1, True))


def test_evidence_checks():
    cfg, keys = _cfg()
    tx, _ = _two_shard_tx()
    d = tx_digest(tx)
    good = tuple(_promise(keys, d, s, i, True) for s in (0, 1) for i in (0, 1))
    assert evidence_problem(AcceptMsg(tx, True, good), cfg) is None
    assert "threshold" in evidence_problem(AcceptMsg(tx, True, good[:3]), cfg)
    # the same signer twice does not count twice
    assert evidence_problem(AcceptMsg(tx, True, good[:3] + good[2:3]), cfg)
    forged = sign_statement(keys[(1, 0)], PreparedStatement(d, True, None, 1, 1))
    assert "signature" in evidence_problem(AcceptMsg(tx, True, good[:3] + (forged,)), cfg)
    assert "contradicts" in evidence_problem(AcceptMsg(tx, False, good), cfg)
    aborts = tuple(_promise(keys, d, 1, i, False) for i in (2, 3))
    assert evidence_problem(AcceptMsg(tx, False, aborts), cfg) is None
    assert evidence_problem(AcceptMsg(tx, False, aborts[:1]), cfg)
    other = tuple(_promise(keys, b"\x00" * 32, 0, i, True) for i in (0, 1))
    assert "another" in evidence_problem(AcceptMsg(tx, True, other + good[2:]), cfg)


def test_client_submit_targets_f_plus_one_per_shard():
    cfg, _ = _cfg(K=2, n=7, f=2)
    tx, _ = _two_shard_tx()
    d, sends = client_submit(tx, cfg, REG)
    assert d == tx_digest(tx)
    assert sorted(dest for dest, _ in sends) == [(s, i) for s in (0, 1) for i in range(3)]
    unknown = Transaction((build_trace(b"\x09" * 32, "x", inputs=[b"\x01" * 32]),))
    with pytest.raises(UnknownContractError):
        client_submit(unknown, cfg, REG)


class Harness:
    """Toy-contract nodes with instant delivery."""

    def __init__(self, K, genesis, silent=()):
        self.cfg, keys = _cfg(K=K)
        self.orderers = [Orderer(s, OrdererConfig(4, 1), key=pool_key) for s in range(K)]
        self.nodes = {
            (s, i): Node(s, i, keys[(s, i)], self.cfg, REG, self.orderers[s], genesis)
            for s in range(K) for i in range(4) if (s, i) not in silent
        }
        self.inbox, self.client = [], []
        self.round = 0

    def submit(self, tx):
        self.inbox += client_submit(tx, self.cfg, REG)[1]

    def run(self, rounds=60):
        for _ in range(rounds):
            r = self.round
            inbox, self.inbox = self.inbox, []
            for dest, msg in inbox:
                if dest == CLIENT:
                    self.client.append(msg)
                elif dest in self.nodes:
                    self.nodes[dest].receive(r, msg)
            for s, o in enumerate(self.orderers):
                for e in o.step(r):
                    for (ss, _), node in self.nodes.items():
                        if ss == s:
                            node.on_entry(r, e)
            for node in self.nodes.values():
                node.fire_timers(r)
                self.inbox += node.drain()
            self.round += 1


def test_cross_shard_commit_creates_remote_output():
    K = 3
    a, b = coin_on(0, K), coin_on(1, K)
    salt = 0
    while True:
        t = spend([a, b], lparams=salt.to_bytes(4, "big"))
        if shard_of(t.outputs[0].id, K) == 2:
            break
        salt += 1
    h = Harness(K, [a, b])
    h.submit(Transaction((t,), (a, b)))
    h.run()
    out = t.outputs[0]
    for i in range(4):
        assert h.nodes[(0, i)].store.state_of(a.id) == "Inactive"
        assert h.nodes[(2, i)].store.state_of(out.id) == "Active"
        assert any(isinstance(e, ObjectCreated) for e in h.nodes[(2, i)].entries)
    assert {m.commit for m in h.client} == {True}


def test_forged_accept_is_refused_and_logged():
    tx, (a, b) = _two_shard_tx()
    h = Harness(2, [a, b])
    keys = _keys(2, 4)
    d = tx_digest(tx)
    forged = tuple(_promise(keys, d, s, i, True) for s in (0, 1) for i in (0,))  # one signer per shard
    h.orderers[0].submit(0, AcceptMsg(tx, True, forged))
    h.run(5)
    node = h.nodes[(0, 1)]
    assert any(isinstance(e, AcceptRefused) for e in node.entries)
    assert node.stats["refused_accept"] == 1
    assert node.store.state_of(a.id) == "Active"


def test_silent_designated_node_is_taken_over():
    tx, (a, b) = _two_shard_tx()
    h = Harness(2, [a, b], silent={(0, 0), (1, 0)})
    h.submit(tx)
    h.run(80)
    assert h.nodes[(0, 1)].store.state_of(a.id) == "Inactive"
    assert h.nodes[(1, 1)].store.state_of(b.id) == "Inactive"


def test_silent_designated_node_in_scenario():
    cfg = ScenarioConfig(seed=3, shards=2, txs=20, faults=((0, 0, SILENT), (1, 0, SILENT)))
    r = run_scenario(cfg)
    assert not r.undecided and not r.oracle_divergences
    bound = 4 * cfg.latency + cfg.delta1 + cfg.delta2 + cfg.max_delay
    assert max(r.latencies()) <= bound
