"""Objects, traces and transactions, and the identifiers that chain them.

An object id is derived from the trace that created it and a name unique
among that trace's outputs; a trace id covers everything about the trace
except its output objects. Together they form a hash-DAG.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .crypto.hashing import Digest, hash_digest
from .encoding import canonical_encode, record

ObjectId = bytes
ContractId = bytes


class DuplicateOutputName(ValueError):
    pass


@record(0x40)
@dataclass(frozen=True)
class TypeTag:
    contract: ContractId
    name: str

    def __post_init__(self):
        if not self.name:
            raise ValueError("type name must be non-empty")


@record(0x41)
@dataclass(frozen=True)
class Object:
    id: ObjectId
    type: TypeTag
    payload: bytes


@record(0x42)
@dataclass(frozen=True)
class Trace:
    contract: ContractId
    procedure: str
    inputs: tuple[ObjectId, ...]
    references: tuple[ObjectId, ...]
    outputs: tuple[Object, ...]
    lparams: bytes
    lreturns: bytes
    deps: tuple["Trace", ...] = ()


@record(0x43)
@dataclass(frozen=True)
class Transaction:
    traces: tuple[Trace, ...]
    # Contents of the free inputs and references, supplied by the client so
    # that every concerned shard can run checkers over objects it does not
    # hold. Each shard verifies the entries it manages against its store.
    objects: tuple[Object, ...] = ()


def contract_id(name: str) -> ContractId:
    return hash_digest("contract", name.encode("utf-8"))


def trace_id(trace: Trace) -> Digest:
    body = (
        trace.contract,
        trace.procedure,
        tuple(trace.inputs),
        tuple(trace.references),
        trace.lparams,
        trace.lreturns,
        tuple(trace_id(d) for d in trace.deps),
    )
    return hash_digest("trace", canonical_encode(body))


def object_id(creator: Digest, unique_name: str) -> ObjectId:
    return hash_digest("object", creator + canonical_encode(unique_name))


def object_ids(creator: Digest, names: Sequence[str]) -> list[ObjectId]:
    if len(set(names)) != len(names):
        raise DuplicateOutputName("output names must be unique within a trace")
    return [object_id(creator, n) for n in names]


def output_name(index: int) -> str:
    return str(index)


def genesis_creator(seed: bytes, index: int) -> Digest:
    return hash_digest("genesis", seed + index.to_bytes(8, "big"))


def genesis_object(seed: bytes, index: int, type_: TypeTag, payload: bytes) -> Object:
    return Object(object_id(genesis_creator(seed, index), output_name(0)), type_, payload)


def tx_digest(tx: Transaction) -> Digest:
    # memoised on the instance; the digest is not a dataclass field
    d = tx.__dict__.get("_digest")
    if d is None:
        d = hash_digest("tx", canonical_encode(tx))
        object.__setattr__(tx, "_digest", d)
    return d


def build_trace(
    contract: ContractId,
    procedure: str,
    inputs: Sequence[ObjectId] = (),
    references: Sequence[ObjectId] = (),
    outputs: Sequence[tuple[TypeTag, bytes]] = (),
    lparams: bytes = b"",
    lreturns: bytes = b"",
    deps: Sequence[Trace] = (),
) -> Trace:
    """Assemble a trace and derive its output ids from its trace id."""
    skeleton = Trace(contract, procedure, tuple(inputs), tuple(references), (), lparams, lreturns, tuple(deps))
    creator = trace_id(skeleton)
    ids = object_ids(creator, [output_name(i) for i in range(len(outputs))])
    objs = tuple(Object(oid, t, p) for oid, (t, p) in zip(ids, outputs))
    return Trace(contract, procedure, skeleton.inputs, skeleton.references, objs, lparams, lreturns, skeleton.deps)


def iter_traces(tx_or_traces) -> Iterator[Trace]:
    """Depth-first, left-to-right: every dep before the trace using it."""
    traces = tx_or_traces.traces if isinstance(tx_or_traces, Transaction) else tx_or_traces
    for t in traces:
        yield from iter_traces(t.deps)
        yield t


class ActiveSet(Mapping[ObjectId, Object]):
    """Persistent map from id to object.

    ``apply`` returns a new set sharing structure with its parent; chains
    deeper than a fixed bound are flattened.
    """

    _MAX_DEPTH = 32
    __slots__ = ("_parent", "_removed", "_added", "_depth", "_flat")

    def __init__(self, objects: Iterable[Object] = ()):
        self._parent: ActiveSet | None = None
        self._removed: frozenset = frozenset()
        self._added: dict[ObjectId, Object] = {}
        for o in objects:
            if o.id in self._added:
                raise ValueError(f"duplicate object id {o.id.hex()}")
            self._added[o.id] = o
        self._depth = 0
        self._flat: dict[ObjectId, Object] | None = self._added

    @classmethod
    def _child(cls, parent: "ActiveSet", removed: frozenset, added: dict) -> "ActiveSet":
        s = cls.__new__(cls)
        s._parent = parent
        s._removed = removed
        s._added = added
        s._depth = parent._depth + 1
        s._flat = None
        if s._depth >= cls._MAX_DEPTH:
            flat = s._flatten()
            s._parent, s._removed, s._added, s._depth, s._flat = None, frozenset(), flat, 0, flat
        return s

    def _flatten(self) -> dict[ObjectId, Object]:
        if self._flat is not None:
            return self._flat
        base = dict(self._parent._flatten())
        for k in self._removed:
            base.pop(k, None)
        base.update(self._added)
        self._flat = base
        return base

    def get(self, oid, default=None):
        node = self
        while node is not None:
            if node._flat is not None:
                return node._flat.get(oid, default)
            if oid in node._added:
                return node._added[oid]
            if oid in node._removed:
                return default
            node = node._parent
        return default

    def __getitem__(self, oid):
        o = self.get(oid)
        if o is None:
            raise KeyError(oid)
        return o

    def __contains__(self, oid) -> bool:
        return self.get(oid) is not None

    def __iter__(self):
        return iter(self._flatten())

    def __len__(self) -> int:
        return len(self._flatten())

    def apply(self, removed: Iterable[ObjectId], added: Iterable[Object]) -> "ActiveSet":
        return ActiveSet._child(self, frozenset(removed), {o.id: o for o in added})

    def objects(self) -> list[Object]:
        return [self._flatten()[k] for k in sorted(self._flatten())]

    def __eq__(self, other) -> bool:
        if isinstance(other, ActiveSet):
            return self._flatten() == other._flatten()
        return NotImplemented

    __hash__ = None

    def __repr__(self) -> str:
        return f"ActiveSet({len(self)} objects)"
