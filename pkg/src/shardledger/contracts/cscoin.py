"""CSCoin: signed value transfers between accounts.

Account payload: ``(owner verify key, balance)``.

``transfer`` consumes accounts and re-emits each one with a signed balance
delta, plus fresh accounts for new owners and an optional fee account.
Value is conserved; every debited account signs the intent, which names
the consumed ids so a signature cannot be replayed.
"""

from __future__ import annotations

from typing import Mapping, Sequence

from ..crypto.signatures import KeyPair, sign
from ..model import Object, Trace, build_trace
from ..validity import ContractChecker
from .common import ContractSpec, dec, enc, is_bytes, is_nat, signed_by

SPEC = ContractSpec("CSCoin", ("Token", "Account"))
ACCOUNT = SPEC.tag("Account")


def account_payload(owner: bytes, balance: int) -> bytes:
    return enc((owner, balance))


def read_account(obj: Object) -> tuple[bytes, int]:
    owner, balance = dec(obj.payload)
    if not is_bytes(owner, 32) or not is_nat(balance):
        raise ValueError("malformed account")
    return owner, balance


def balance_of(obj: Object) -> int:
    return read_account(obj)[1]


def _intent(input_ids, deltas, new_owners, fee) -> tuple:
    return ("CSCoin.transfer", tuple(input_ids), tuple(deltas), tuple(new_owners), tuple(fee))


def _flows(input_ids, deltas, new_owners, fee) -> bytes:
    return enc(("flows", tuple(zip(input_ids, deltas)), tuple(new_owners), tuple(fee)))


# -- procedures (client side) ------------------------------------------------


def init(token: Object, allocations: Sequence[tuple[bytes, int]]) -> Trace:
    """Consume the contract token and mint the fixed initial supply."""
    allocations = tuple((vk, int(a)) for vk, a in allocations)
    return build_trace(
        SPEC.id, "init",
        inputs=[token.id],
        outputs=[(ACCOUNT, account_payload(vk, a)) for vk, a in allocations],
        lparams=enc(allocations),
        lreturns=enc(sum(a for _, a in allocations)),
    )


def transfer(
    accounts: Sequence[Object],
    deltas: Sequence[int],
    new_owners: Sequence[tuple[bytes, int]] = (),
    keys: Mapping[bytes, KeyPair] | None = None,
    fee: tuple[bytes, int] | None = None,
) -> Trace:
    keys = keys or {}
    ids = [a.id for a in accounts]
    new_owners = tuple((vk, int(x)) for vk, x in new_owners)
    fee_t = (fee,) if fee else ()
    intent = enc(_intent(ids, deltas, new_owners, fee_t))
    sigs = []
    outputs = []
    for acc, d in zip(accounts, deltas):
        owner, bal = read_account(acc)
        sigs.append(sign(keys[owner], intent) if d < 0 else b"")
        outputs.append((ACCOUNT, account_payload(owner, bal + d)))
    outputs += [(ACCOUNT, account_payload(vk, x)) for vk, x in (*new_owners, *fee_t)]
    return build_trace(
        SPEC.id, "transfer",
        inputs=ids,
        outputs=outputs,
        lparams=enc((tuple(deltas), new_owners, fee_t, tuple(sigs))),
        lreturns=_flows(ids, deltas, new_owners, fee_t),
    )


def fee_paid(trace: Trace) -> int:
    """Fee carried by a transfer trace, read from its value flows."""
    if trace.contract != SPEC.id or trace.procedure != "transfer":
        return 0
    try:
        _, _, _, fee = dec(trace.lreturns)
        return sum(x for _, x in fee)
    except Exception:
        return 0


# -- checker -----------------------------------------------------------------


def _check_init(inputs, references, lparams, outputs, lreturns) -> bool:
    if len(inputs) != 1 or references or not SPEC.is_type(inputs[0], "Token"):
        return False
    allocations = dec(lparams)
    if len(allocations) != len(outputs) or not allocations:
        return False
    for (vk, amount), out in zip(allocations, outputs):
        if not SPEC.is_type(out, "Account") or not is_bytes(vk, 32) or not is_nat(amount) or amount == 0:
            return False
        if read_account(out) != (vk, amount):
            return False
    return dec(lreturns) == sum(a for _, a in allocations)


def _check_transfer(inputs, references, lparams, outputs, lreturns) -> bool:
    if not inputs or references:
        return False
    deltas, new_owners, fee, sigs = dec(lparams)
    if not (len(deltas) == len(sigs) == len(inputs)) or len(fee) > 1:
        return False
    if len(outputs) != len(inputs) + len(new_owners) + len(fee):
        return False
    ids = [o.id for o in inputs]
    intent = _intent(ids, deltas, new_owners, fee)
    total = 0
    for acc, d, sig, out in zip(inputs, deltas, sigs, outputs):
        if not SPEC.is_type(acc, "Account") or not SPEC.is_type(out, "Account"):
            return False
        if not isinstance(d, int) or isinstance(d, bool):
            return False
        owner, bal = read_account(acc)
        if bal + d < 0:
            return False  # overdraft
        if d < 0 and not signed_by(owner, intent, sig):
            return False
        if read_account(out) != (owner, bal + d):
            return False
        total += d
    for (vk, amount), out in zip((*new_owners, *fee), outputs[len(inputs):]):
        if not SPEC.is_type(out, "Account") or not is_bytes(vk, 32) or not is_nat(amount) or amount == 0:
            return False
        if read_account(out) != (vk, amount):
            return False
        total += amount
    if total != 0:
        return False
    return lreturns == _flows(ids, deltas, new_owners, fee)


def check(procedure, inputs, references, lparams, outputs, lreturns, deps) -> bool:
    if procedure == "init":
        return _check_init(inputs, references, lparams, outputs, lreturns)
    if procedure == "transfer":
        return _check_transfer(inputs, references, lparams, outputs, lreturns)
    return False


CHECKER = ContractChecker(SPEC.id, SPEC.name, SPEC.types, check)
