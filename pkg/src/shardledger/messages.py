"""Wire records of the cross-shard commit protocol."""

from __future__ import annotations

from dataclasses import dataclass

from .crypto.signatures import KeyPair, sign, verify
from .encoding import canonical_encode, record
from .model import Object, Transaction
from .validity import AbortReason


@record(0x50)
@dataclass(frozen=True)
class PreparedStatement:
    tx: bytes  # transaction digest
    commit: bool
    reason: AbortReason | None
    shard: int
    node: int


@record(0x51)
@dataclass(frozen=True)
class SignedPrepared:
    statement: PreparedStatement
    signature: bytes


@record(0x52)
@dataclass(frozen=True)
class PrepareMsg:
    tx: Transaction


@record(0x53)
@dataclass(frozen=True)
class PreparedMsg:
    signed: SignedPrepared
    # carried unsigned so a shard that has not seen prepare(T) can sequence it
    tx: Transaction


@record(0x54)
@dataclass(frozen=True)
class AcceptMsg:
    tx: Transaction
    commit: bool
    evidence: tuple[SignedPrepared, ...]


@record(0x55)
@dataclass(frozen=True)
class CreateObjectMsg:
    object: Object
    accept: AcceptMsg


@record(0x56)
@dataclass(frozen=True)
class AcceptForward:
    """An accept candidate or decision handed to another node to sequence."""

    accept: AcceptMsg


@record(0x57)
@dataclass(frozen=True)
class DecisionNotice:
    tx: bytes
    commit: bool
    shard: int
    node: int


def sign_statement(key: KeyPair, st: PreparedStatement) -> SignedPrepared:
    return SignedPrepared(st, sign(key, canonical_encode(st)))


def statement_valid(sp: SignedPrepared, key_sets) -> bool:
    """Signature check against ``key_sets[shard][node]``."""
    st = sp.statement
    if not isinstance(st, PreparedStatement) or not isinstance(st.shard, int) or not isinstance(st.node, int):
        return False
    if not 0 <= st.shard < len(key_sets) or not 0 <= st.node < len(key_sets[st.shard]):
        return False
    return verify(key_sets[st.shard][st.node], canonical_encode(st), sp.signature)


def contradictory(a: SignedPrepared, b: SignedPrepared) -> bool:
    """Two statements by one node about one transaction with opposite decisions."""
    sa, sb = a.statement, b.statement
    return (sa.tx, sa.shard, sa.node) == (sb.tx, sb.shard, sb.node) and sa.commit != sb.commit
