"""Validity rules for traces and transactions, and the checker registry."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Collection, Iterable

from .encoding import record
from .model import (
    ActiveSet,
    ContractId,
    Object,
    ObjectId,
    Trace,
    Transaction,
    iter_traces,
    object_id,
    output_name,
    trace_id,
)


class AbortKind:
    INACTIVE_INPUT = "InactiveInput"
    INACTIVE_REFERENCE = "InactiveReference"
    CHECKER_REJECTED = "CheckerRejected"
    OUTPUTS_WITHOUT_INPUTS = "OutputsWithoutInputs"
    FOREIGN_TYPE = "ForeignType"
    LOCKED_OBJECT = "LockedObject"
    UNKNOWN_CONTRACT = "UnknownContract"
    MALFORMED_OUTPUT = "MalformedOutput"
    OBJECT_MISMATCH = "ObjectMismatch"
    MALFORMED = "Malformed"
    INSUFFICIENT_FEE = "InsufficientFee"

    ALL = (
        INACTIVE_INPUT, INACTIVE_REFERENCE, CHECKER_REJECTED, OUTPUTS_WITHOUT_INPUTS, FOREIGN_TYPE,
        LOCKED_OBJECT, UNKNOWN_CONTRACT, MALFORMED_OUTPUT, OBJECT_MISMATCH, MALFORMED, INSUFFICIENT_FEE,
    )


@record(0x44)
@dataclass(frozen=True)
class AbortReason:
    kind: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.kind}({self.detail})" if self.detail else self.kind


class MalformedTransaction(ValueError):
    pass


CheckFn = Callable[[str, tuple, tuple, bytes, tuple, bytes, tuple], bool]


@dataclass(frozen=True)
class ContractChecker:
    contract: ContractId
    name: str
    types: frozenset[str]
    check: CheckFn
    # Optional exemption from the same-contract rule for outputs only; used
    # by the contract manager to mint a new contract's first token.
    may_emit: Callable[[Trace, Object], bool] | None = None

    def run(self, trace: Trace, inputs: tuple, references: tuple) -> bool:
        try:
            return self.check(
                trace.procedure, inputs, references, trace.lparams, trace.outputs, trace.lreturns, trace.deps
            ) is True
        except Exception:
            return False


@dataclass
class CheckerRegistry:
    checkers: dict[ContractId, ContractChecker] = field(default_factory=dict)

    def register(self, checker: ContractChecker) -> None:
        if checker.contract in self.checkers and self.checkers[checker.contract] is not checker:
            raise ValueError(f"contract {checker.name} already registered")
        self.checkers[checker.contract] = checker

    def get(self, contract: ContractId) -> ContractChecker | None:
        return self.checkers.get(contract)

    def __contains__(self, contract: ContractId) -> bool:
        return contract in self.checkers

    def name(self, contract: ContractId) -> str:
        c = self.checkers.get(contract)
        return c.name if c else contract.hex()[:16]


def _type_ok(obj: Object, checker: ContractChecker) -> bool:
    return obj.type.contract == checker.contract and obj.type.name in checker.types


def check_trace(
    trace: Trace,
    alpha: ActiveSet,
    reg: CheckerRegistry,
    run_checkers: Collection[ContractId] | None = None,
) -> ActiveSet | AbortReason:
    checker = reg.get(trace.contract)
    if checker is None:
        return AbortReason(AbortKind.UNKNOWN_CONTRACT, trace.contract.hex())

    # (1) dependencies, depth-first, threading the active set
    for dep in trace.deps:
        alpha = check_trace(dep, alpha, reg, run_checkers)
        if isinstance(alpha, AbortReason):
            return alpha

    # (2) side conditions
    if len(set(trace.inputs)) != len(trace.inputs):
        return AbortReason(AbortKind.INACTIVE_INPUT, "input listed twice")
    inputs = []
    for oid in trace.inputs:
        o = alpha.get(oid)
        if o is None:
            return AbortReason(AbortKind.INACTIVE_INPUT, oid.hex())
        inputs.append(o)
    refs = []
    for oid in trace.references:
        o = alpha.get(oid)
        if o is None:
            return AbortReason(AbortKind.INACTIVE_REFERENCE, oid.hex())
        refs.append(o)
    if trace.outputs and not trace.inputs:
        return AbortReason(AbortKind.OUTPUTS_WITHOUT_INPUTS, f"{checker.name}.{trace.procedure}")
    creator = trace_id(trace)
    for i, o in enumerate(trace.outputs):
        if o.id != object_id(creator, output_name(i)):
            return AbortReason(AbortKind.MALFORMED_OUTPUT, f"output {i}")
    for o in (*inputs, *refs):
        if not _type_ok(o, checker):
            return AbortReason(AbortKind.FOREIGN_TYPE, o.id.hex())
    for o in trace.outputs:
        if not _type_ok(o, checker) and not (checker.may_emit and checker.may_emit(trace, o)):
            return AbortReason(AbortKind.FOREIGN_TYPE, o.id.hex())

    # (3) the contract's checker
    if run_checkers is None or trace.contract in run_checkers:
        if not checker.run(trace, tuple(inputs), tuple(refs)):
            return AbortReason(AbortKind.CHECKER_REJECTED, f"{checker.name}.{trace.procedure}")

    return alpha.apply(trace.inputs, trace.outputs)


def validate_transaction(
    tx: Transaction,
    alpha: ActiveSet,
    reg: CheckerRegistry,
    run_checkers: Collection[ContractId] | None = None,
) -> ActiveSet | AbortReason:
    if not tx.traces:
        raise MalformedTransaction("transaction has no traces")
    for t in tx.traces:
        alpha = check_trace(t, alpha, reg, run_checkers)
        if isinstance(alpha, AbortReason):
            return alpha
    return alpha


def _ids(traces: Iterable[Trace]):
    zeta_in: dict[ObjectId, None] = {}
    zeta_ref: dict[ObjectId, None] = {}
    xi: set[ObjectId] = set()
    for t in traces:
        for i in t.inputs:
            zeta_in[i] = None
        for r in t.references:
            zeta_ref[r] = None
        for o in t.outputs:
            xi.add(o.id)
    return zeta_in, zeta_ref, xi


def free_inputs(tx: Transaction) -> frozenset[ObjectId]:
    zeta_in, _, xi = _ids(iter_traces(tx))
    return frozenset(i for i in zeta_in if i not in xi)


def free_references(tx: Transaction) -> frozenset[ObjectId]:
    _, zeta_ref, xi = _ids(iter_traces(tx))
    return frozenset(r for r in zeta_ref if r not in xi)


def created_objects(tx: Transaction) -> list[Object]:
    """Outputs that survive the transaction (not consumed by a later trace)."""
    consumed = {i for t in iter_traces(tx) for i in t.inputs}
    return [o for t in iter_traces(tx) for o in t.outputs if o.id not in consumed]
