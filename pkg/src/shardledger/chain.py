"""Node hash-chains: log entries, checkpoints and signed heads."""

from __future__ import annotations

from dataclasses import dataclass

from .crypto.hashing import ZERO_DIGEST, Digest, hash_digest
from .crypto.merkle import merkle_root
from .crypto.signatures import KeyPair, sign, verify
from .encoding import canonical_encode, record
from .messages import AcceptMsg, CreateObjectMsg, SignedPrepared
from .model import Object, Transaction
from .validity import AbortReason

EMPTY_ROOT = hash_digest("empty", b"")


@record(0x60)
@dataclass(frozen=True)
class PrepareSeen:
    tx: Transaction


@record(0x61)
@dataclass(frozen=True)
class PromiseSeen:
    prepared: SignedPrepared


@record(0x62)
@dataclass(frozen=True)
class AcceptSeen:
    tx: Transaction
    commit: bool


@record(0x63)
@dataclass(frozen=True)
class CommittedTx:
    tx: Transaction


@record(0x64)
@dataclass(frozen=True)
class AbortedTx:
    tx: bytes
    reason: AbortReason | None
    shard: int  # shard whose abort promise decided the outcome


@record(0x65)
@dataclass(frozen=True)
class AcceptRefused:
    accept: AcceptMsg


@record(0x66)
@dataclass(frozen=True)
class ObjectCreated:
    request: CreateObjectMsg


ENTRY_TYPES = (PrepareSeen, PromiseSeen, AcceptSeen, CommittedTx, AbortedTx, AcceptRefused, ObjectCreated)


@record(0x67)
@dataclass(frozen=True)
class Checkpoint:
    shard: int
    seq_no: int
    entries: tuple
    merkle_root: bytes
    prev_head: bytes
    head: bytes


@record(0x68)
@dataclass(frozen=True)
class ShardDecision:
    shard: int
    seq_no: int
    head: bytes
    signatures: tuple[tuple[int, bytes], ...]  # (node index, signature over the head)


@record(0x69)
@dataclass(frozen=True)
class ChainHeader:
    shard: int
    node: int
    K: int
    f: int
    key_sets: tuple[tuple[bytes, ...], ...]
    genesis: tuple[Object, ...]
    fee_min: int = 0


def entry_leaf(entry) -> bytes:
    return canonical_encode(entry)


# replicas of a shard seal identical entries; keep the last few roots
_ROOTS: dict[tuple[bytes, ...], Digest] = {}
_ROOTS_MAX = 64


def entries_root(entries) -> Digest:
    if not entries:
        return EMPTY_ROOT
    leaves = tuple(entry_leaf(e) for e in entries)
    root = _ROOTS.get(leaves)
    if root is None:
        root = merkle_root(list(leaves))
        if len(_ROOTS) >= _ROOTS_MAX:
            _ROOTS.pop(next(iter(_ROOTS)))
        _ROOTS[leaves] = root
    return root


def chain_head(root: Digest, seq_no: int, prev_head: Digest) -> Digest:
    return hash_digest("chain", root + seq_no.to_bytes(8, "big") + prev_head)


def seal_checkpoint(shard: int, entries, prev: Checkpoint | None) -> Checkpoint:
    entries = tuple(entries)
    seq_no = 0 if prev is None else prev.seq_no + 1
    prev_head = ZERO_DIGEST if prev is None else prev.head
    root = entries_root(entries)
    return Checkpoint(shard, seq_no, entries, root, prev_head, chain_head(root, seq_no, prev_head))


def head_message(shard: int, seq_no: int, head: Digest) -> bytes:
    return canonical_encode(("head", shard, seq_no, head))


def sign_head(key: KeyPair, cp: Checkpoint) -> bytes:
    return sign(key, head_message(cp.shard, cp.seq_no, cp.head))


def decision_signers(decision: ShardDecision, keys: tuple[bytes, ...]) -> set[int]:
    msg = head_message(decision.shard, decision.seq_no, decision.head)
    good = set()
    for node, sig in decision.signatures:
        if isinstance(node, int) and 0 <= node < len(keys) and verify(keys[node], msg, sig):
            good.add(node)
    return good


def decision_valid(decision: ShardDecision, keys: tuple[bytes, ...], f: int) -> bool:
    return len(decision_signers(decision, keys)) >= f + 1
