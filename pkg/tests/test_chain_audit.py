import dataclasses
import math

import pytest

from shardledger.audit import (
    Chain,
    ChainFormatError,
    ChainInvalid,
    cross_audit,
    full_audit,
    partial_audit,
    proof_counts,
    read_chain,
    verify_partial,
)
from shardledger.chain import (
    EMPTY_ROOT,
    AbortedTx,
    ChainHeader,
    ShardDecision,
    chain_head,
    entries_root,
    seal_checkpoint,
    sign_head,
)
from shardledger.crypto.hashing import ZERO_DIGEST
from shardledger.encoding import encode_stream
from shardledger.shard import concerned_shards
from shardledger.sim import ScenarioConfig, node_key, run_scenario
from shardledger.validity import AbortKind, AbortReason


@pytest.fixture(scope="module")
def honest():
    return run_scenario(ScenarioConfig(seed=5, shards=2, txs=30, inputs_per_tx=2, conflict_fraction=0.3, epoch=8))


@pytest.fixture(scope="module")
def ds_run():
    faults = tuple((1, i, "Liar") for i in range(3))
    return run_scenario(ScenarioConfig(seed=7, shards=2, txs=20, inputs_per_tx=2, faults=faults))


def _export(chain: Chain) -> bytes:
    return encode_stream([chain.header, *zip(chain.checkpoints, chain.decisions)])


def test_chain_head_formula():
    cp = seal_checkpoint(0, [], None)
    assert cp.prev_head == ZERO_DIGEST and cp.merkle_root == EMPTY_ROOT
    assert cp.head == chain_head(EMPTY_ROOT, 0, ZERO_DIGEST)
    nxt = seal_checkpoint(0, [], cp)
    assert nxt.seq_no == 1 and nxt.prev_head == cp.head


def test_entry_order_changes_head():
    a = AbortedTx(b"\x01" * 32, None, 0)
    b = AbortedTx(b"\x02" * 32, None, 0)
    assert entries_root([a, b]) != entries_root([b, a])
    assert seal_checkpoint(0, [a, b], None).head != seal_checkpoint(0, [b, a], None).head


def test_honest_nodes_share_heads(honest):
    for s in range(2):
        heads = {tuple(cp.head for cp in read_chain(honest.chains[(s, i)]).checkpoints) for i in range(4)}
        assert len(heads) == 1


def test_honest_full_audit_is_clean(honest, registry):
    for data in honest.chains.values():
        assert full_audit(read_chain(data), registry) == []


def test_tampered_entry_breaks_chain(honest, registry):
    chain = read_chain(honest.chains[(0, 1)])
    i = next(k for k, cp in enumerate(chain.checkpoints) if cp.entries)
    cp = chain.checkpoints[i]
    chain.checkpoints[i] = dataclasses.replace(cp, entries=cp.entries[1:])
    kinds = [f.kind for f in full_audit(read_chain(_export(chain)), registry)]
    assert kinds == ["ChainBroken"]


def test_skipped_checkpoint_breaks_chain(honest, registry):
    chain = read_chain(honest.chains[(0, 1)])
    assert len(chain.checkpoints) >= 3
    del chain.checkpoints[1], chain.decisions[1]
    findings = full_audit(chain, registry)
    assert findings[0].kind == "ChainBroken" and findings[0].seq_no == 1


def test_stripped_signatures_are_weak(honest, registry):
    chain = read_chain(honest.chains[(1, 0)])
    d = chain.decisions[0]
    chain.decisions[0] = dataclasses.replace(d, signatures=d.signatures[:1])
    assert [f.kind for f in full_audit(chain, registry)] == ["WeakDecision"]


def test_truncated_bytes_are_unreadable(honest):
    with pytest.raises(ChainFormatError):
        read_chain(honest.chains[(0, 0)][:-3])
    with pytest.raises(ChainFormatError):
        read_chain(b"")


def test_partial_audit_of_a_real_transaction(honest):
    chain = read_chain(honest.chains[(0, 2)])
    keys = chain.header.key_sets[0]
    rec = next(r for r in honest.committed if 0 in concerned_shards(r.tx, 2))
    proof = partial_audit(chain, rec.digest, node_key(5, 0, 2))
    assert proof.unknown is None
    assert verify_partial(proof, keys, 1, rec.digest)
    assert proof_counts(proof)[0] == 2
    assert not verify_partial(proof, keys, 1, b"\x00" * 32)


def _synthetic(N: int):
    keys = [node_key(99, 0, i) for i in range(4)]
    vks = tuple(k.verify_key for k in keys)
    entries = [AbortedTx(i.to_bytes(32, "big"), AbortReason(AbortKind.LOCKED_OBJECT), 0) for i in range(N)]
    cp = seal_checkpoint(0, entries, None)
    dec = ShardDecision(0, 0, cp.head, tuple((i, sign_head(k, cp)) for i, k in enumerate(keys)))
    return Chain(ChainHeader(0, 0, 1, 1, (vks,), ()), [cp], [dec]), keys, vks


@pytest.mark.parametrize("log_n", range(6, 13))
def test_partial_proof_size(log_n):
    N = 2**log_n
    chain, keys, vks = _synthetic(N)
    tx = (N // 3).to_bytes(32, "big")
    proof = partial_audit(chain, tx, keys[0])
    assert verify_partial(proof, vks, 1, tx)
    assert proof_counts(proof) == (2, math.ceil(math.log2(N)))


def test_partial_proof_rejects_tampering():
    chain, keys, vks = _synthetic(64)
    tx = (5).to_bytes(32, "big")
    proof = partial_audit(chain, tx, keys[0])
    wrong_head = dataclasses.replace(proof.decision, head=b"\x00" * 32)
    assert not verify_partial(dataclasses.replace(proof, decision=wrong_head), vks, 1, tx)
    other = AbortedTx((6).to_bytes(32, "big"), None, 0)
    assert not verify_partial(dataclasses.replace(proof, entry=other, tx=other.tx), vks, 1)
    bad_root = dataclasses.replace(proof, merkle_root=b"\x01" * 32)
    assert not verify_partial(bad_root, vks, 1, tx)
    weak = dataclasses.replace(proof.decision, signatures=proof.decision.signatures[:1])
    assert not verify_partial(dataclasses.replace(proof, decision=weak), vks, 1, tx)


def test_unknown_transaction_answer():
    chain, keys, vks = _synthetic(8)
    tx = b"\xee" * 32
    proof = partial_audit(chain, tx, keys[0])
    assert proof.unknown is not None and proof.unknown.seq_no == 0
    assert verify_partial(proof, vks, 1, tx)
    forged = dataclasses.replace(proof, unknown_signature=bytes(64))
    assert not verify_partial(forged, vks, 1, tx)


def test_cross_audit_honest(honest, registry):
    v = cross_audit(read_chain(honest.chains[(0, 0)]), read_chain(honest.chains[(1, 0)]), registry)
    assert v.ok and "Ok" in v.render()


def test_cross_audit_convicts_dishonest_shard(ds_run, registry):
    accuser = read_chain(ds_run.chains[(0, 0)])
    accused = read_chain(ds_run.chains[(1, 3)])
    v = cross_audit(accuser, accused, registry)
    assert v.guilty == 1
    assert len(v.statements) == 2 and v.decision is not None
    assert "Guilty" in v.render()


def test_cross_audit_notes_truncation(honest, registry):
    a = read_chain(honest.chains[(0, 0)])
    b = read_chain(honest.chains[(1, 0)])
    del b.checkpoints[-1], b.decisions[-1]
    v = cross_audit(a, b, registry)
    assert v.ok and v.notes


def test_cross_audit_refuses_broken_chain(honest, registry):
    a = read_chain(honest.chains[(0, 0)])
    b = read_chain(honest.chains[(1, 0)])
    del b.checkpoints[0], b.decisions[0]
    with pytest.raises(ChainInvalid):
        cross_audit(a, b, registry)
