"""Per-shard object store, the object state machine and the local decision."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .encoding import canonical_encode
from .model import ActiveSet, ContractId, Object, ObjectId, Transaction, iter_traces
from .validity import (
    AbortKind,
    AbortReason,
    CheckerRegistry,
    MalformedTransaction,
    created_objects,
    free_inputs,
    free_references,
    validate_transaction,
)

ACTIVE = "Active"
LOCKED = "Locked"
INACTIVE = "Inactive"

# (from, to) pairs of the object state machine; None is "not yet created".
EDGES = frozenset({
    (None, ACTIVE),
    (ACTIVE, LOCKED),
    (LOCKED, LOCKED),
    (LOCKED, ACTIVE),
    (LOCKED, INACTIVE),
})


class NoConcernedShard(ValueError):
    pass


class IllegalTransition(AssertionError):
    pass


def shard_of(oid: ObjectId, K: int) -> int:
    if K < 1:
        raise ValueError("K must be at least 1")
    return int.from_bytes(oid[-8:], "big") % K


def concerned_shards(tx: Transaction, K: int) -> frozenset[int]:
    ids = free_inputs(tx) | free_references(tx)
    if not ids:
        raise NoConcernedShard("transaction has no free inputs or references")
    return frozenset(shard_of(i, K) for i in ids)


def _ordered_free(tx: Transaction) -> tuple[list[ObjectId], list[ObjectId]]:
    fi, fr = free_inputs(tx), free_references(tx)
    ins: dict[ObjectId, None] = {}
    refs: dict[ObjectId, None] = {}
    for t in iter_traces(tx):
        for i in t.inputs:
            if i in fi:
                ins[i] = None
        for r in t.references:
            if r in fr and r not in fi:
                refs[r] = None
    return list(ins), list(refs)


@dataclass
class ObjectRecord:
    object: Object
    inactive: bool = False
    exclusive: bytes | None = None
    shared: dict[bytes, int] = field(default_factory=dict)

    @property
    def state(self) -> str:
        if self.inactive:
            return INACTIVE
        if self.exclusive is not None or self.shared:
            return LOCKED
        return ACTIVE

    def lock_label(self) -> str:
        if self.exclusive is not None:
            return f"exclusive:{self.exclusive.hex()[:16]}"
        if self.shared:
            return "shared:" + ",".join(f"{k.hex()[:16]}x{v}" for k, v in sorted(self.shared.items()))
        return ""


@dataclass
class Decision:
    commit: bool
    reason: AbortReason | None = None

    @staticmethod
    def ok() -> "Decision":
        return Decision(True)

    @staticmethod
    def abort(kind: str, detail: str = "") -> "Decision":
        return Decision(False, AbortReason(kind, detail))


class ShardStore:
    def __init__(self, shard: int, K: int, genesis: Iterable[Object] = ()):
        self.shard = shard
        self.K = K
        self.records: dict[ObjectId, ObjectRecord] = {}
        self.transitions: list[tuple[ObjectId, str | None, str]] = []
        self.anomalies: list[str] = []
        self.strict = True
        for o in genesis:
            if shard_of(o.id, K) == shard:
                self.create(o)

    def manages(self, oid: ObjectId) -> bool:
        return shard_of(oid, self.K) == self.shard

    def _move(self, rec: ObjectRecord | None, oid: ObjectId, before: str | None, mutate) -> None:
        mutate()
        after = self.records[oid].state
        if (before, after) not in EDGES:
            raise IllegalTransition(f"{oid.hex()[:16]}: {before} -> {after}")
        self.transitions.append((oid, before, after))

    def _fail(self, msg: str) -> None:
        if self.strict:
            raise IllegalTransition(msg)
        self.anomalies.append(msg)

    # -- queries ---------------------------------------------------------

    def active_objects(self) -> dict[ObjectId, Object]:
        return {k: r.object for k, r in self.records.items() if not r.inactive}

    def state_of(self, oid: ObjectId) -> str | None:
        r = self.records.get(oid)
        return r.state if r else None

    def snapshot(self) -> bytes:
        rows = tuple(
            (r.object, r.state, r.exclusive, tuple(sorted(r.shared.items())))
            for _, r in sorted(self.records.items())
        )
        return canonical_encode((self.shard, self.K, rows))

    # -- decision ----------------------------------------------------------

    def local_decision(self, tx: Transaction, reg: CheckerRegistry) -> Decision:
        """Commit iff every local free object is usable and the checks pass."""
        try:
            ins, refs = _ordered_free(tx)
        except Exception:
            return Decision.abort(AbortKind.MALFORMED, "unreadable transaction")
        if not tx.traces:
            return Decision.abort(AbortKind.MALFORMED, "no traces")
        supplied: dict[ObjectId, Object] = {}
        for o in tx.objects:
            if o.id in supplied:
                return Decision.abort(AbortKind.OBJECT_MISMATCH, f"{o.id.hex()} supplied twice")
            supplied[o.id] = o
        local: set[ObjectId] = set()
        for oid, kind in [(i, AbortKind.INACTIVE_INPUT) for i in ins] + [(r, AbortKind.INACTIVE_REFERENCE) for r in refs]:
            if not self.manages(oid):
                continue
            local.add(oid)
            rec = self.records.get(oid)
            if rec is None or rec.inactive:
                return Decision.abort(kind, oid.hex())
            is_input = kind == AbortKind.INACTIVE_INPUT
            if rec.exclusive is not None or (is_input and rec.shared):
                return Decision.abort(AbortKind.LOCKED_OBJECT, oid.hex())
            if oid in supplied and supplied[oid] != rec.object:
                return Decision.abort(AbortKind.OBJECT_MISMATCH, oid.hex())

        alpha_objs = []
        for oid in (*ins, *refs):
            if oid in local:
                alpha_objs.append(self.records[oid].object)
            elif oid in supplied:
                alpha_objs.append(supplied[oid])
        try:
            result = validate_transaction(tx, ActiveSet(alpha_objs), reg, checkers_for(tx, local))
        except MalformedTransaction as e:
            return Decision.abort(AbortKind.MALFORMED, str(e))
        if isinstance(result, AbortReason):
            return Decision(False, result)
        return Decision.ok()

    # -- effects -----------------------------------------------------------

    def lock(self, digest: bytes, tx: Transaction) -> None:
        ins, refs = _ordered_free(tx)
        for oid in ins:
            if not self.manages(oid):
                continue
            rec = self.records.get(oid)
            if rec is None or rec.state != ACTIVE:
                self._fail(f"lock {oid.hex()[:16]}: not active")
                continue
            self._move(rec, oid, ACTIVE, lambda: setattr(rec, "exclusive", digest))
        for oid in refs:
            if not self.manages(oid):
                continue
            rec = self.records.get(oid)
            if rec is None or rec.inactive or rec.exclusive is not None:
                self._fail(f"share {oid.hex()[:16]}: not lockable")
                continue
            before = rec.state
            self._move(rec, oid, before, lambda: rec.shared.__setitem__(digest, rec.shared.get(digest, 0) + 1))

    def release(self, digest: bytes, tx: Transaction) -> None:
        ins, refs = _ordered_free(tx)
        for oid in ins:
            rec = self.records.get(oid)
            if rec is not None and rec.exclusive == digest:
                self._move(rec, oid, LOCKED, lambda: setattr(rec, "exclusive", None))
        for oid in refs:
            rec = self.records.get(oid)
            if rec is not None and digest in rec.shared:
                self._move(rec, oid, LOCKED, lambda: rec.shared.pop(digest))

    def consume_and_create(self, digest: bytes, tx: Transaction) -> list[Object]:
        """Apply a committed transaction; returns outputs owned by other shards."""
        ins, refs = _ordered_free(tx)
        for oid in ins:
            if not self.manages(oid):
                continue
            rec = self.records.get(oid)
            if rec is None or rec.inactive:
                self._fail(f"consume {oid.hex()[:16]}: not active")
                continue
            if rec.exclusive != digest:
                # only reachable when a dishonest shard forced the commit
                self._fail(f"consume {oid.hex()[:16]}: not locked by this transaction")
                if rec.exclusive is not None or rec.shared:
                    continue
                self._move(rec, oid, ACTIVE, lambda: setattr(rec, "exclusive", digest))
            self._move(rec, oid, LOCKED, lambda: setattr(rec, "inactive", True))
        for oid in refs:
            rec = self.records.get(oid)
            if rec is not None and digest in rec.shared:
                self._move(rec, oid, LOCKED, lambda: rec.shared.pop(digest))
        remote = []
        for o in created_objects(tx):
            if self.manages(o.id):
                self.create(o)
            else:
                remote.append(o)
        return remote

    def create(self, obj: Object) -> bool:
        """Materialise an object; repeated creation of the same object is a no-op."""
        if not self.manages(obj.id):
            raise ValueError(f"object {obj.id.hex()[:16]} belongs to shard {shard_of(obj.id, self.K)}")
        rec = self.records.get(obj.id)
        if rec is not None:
            if rec.object != obj:
                self._fail(f"create {obj.id.hex()[:16]}: id reused with different content")
            return False
        self.records[obj.id] = ObjectRecord(obj)
        self.transitions.append((obj.id, None, ACTIVE))
        return True


def checkers_for(tx: Transaction, local: set[ObjectId]) -> frozenset[ContractId]:
    """Contracts whose checkers a shard runs for ``tx``.

    A trace is checked where its objects live: when one of its free inputs
    or references is local, or when it consumes an object produced by a
    trace that is checked here. Traces touching no objects at all are
    checked everywhere.
    """
    anchored: set[ObjectId] = set(local)
    contracts: set[ContractId] = set()
    for t in iter_traces(tx):
        touched = (*t.inputs, *t.references)
        if not touched or any(i in anchored for i in touched):
            contracts.add(t.contract)
            anchored.update(o.id for o in t.outputs)
    return frozenset(contracts)
