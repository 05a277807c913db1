"""ManageShards: shard membership records.

Shard payload: a tuple of node descriptors ``(name, address, verify key)``.
Membership changes need 2f+1 member signatures; a node can be evicted by
anyone holding two contradictory statements it signed.
"""

from __future__ import annotations

from typing import Sequence

from ..crypto.signatures import KeyPair, sign, verify
from ..encoding import canonical_encode
from ..messages import SignedPrepared, contradictory
from ..model import Object, Trace, build_trace
from ..validity import ContractChecker
from .common import ContractSpec, dec, enc, is_bytes

SPEC = ContractSpec("ManageShards", ("Token", "Shard"))
TOKEN = SPEC.tag("Token")
SHARD = SPEC.tag("Shard")

Descriptor = tuple[str, str, bytes]


def faults_tolerated(n: int) -> int:
    return (n - 1) // 3


def read_shard(obj: Object) -> tuple[Descriptor, ...]:
    return tuple(dec(obj.payload))


def _valid_descriptors(ds) -> bool:
    if not ds:
        return False
    vks = [d[2] for d in ds]
    if len(set(vks)) != len(vks):
        return False
    return all(
        len(d) == 3 and isinstance(d[0], str) and isinstance(d[1], str) and is_bytes(d[2], 32)
        for d in ds
    )


# -- procedures --------------------------------------------------------------


def create(token: Object, descriptors: Sequence[Descriptor]) -> Trace:
    ds = tuple(tuple(d) for d in descriptors)
    return build_trace(
        SPEC.id, "create",
        inputs=[token.id],
        outputs=[(TOKEN, b""), (SHARD, enc(ds))],
        lparams=enc(ds),
    )


def update(shard: Object, descriptors: Sequence[Descriptor], signers: Sequence[KeyPair]) -> Trace:
    ds = tuple(tuple(d) for d in descriptors)
    msg = enc(("MS.update", shard.id, ds))
    sigs = tuple((k.verify_key, sign(k, msg)) for k in signers)
    return build_trace(
        SPEC.id, "update",
        inputs=[shard.id],
        outputs=[(SHARD, enc(ds))],
        lparams=enc((ds, sigs)),
    )


def evict(shard: Object, vk: bytes, first: SignedPrepared, second: SignedPrepared) -> Trace:
    remaining = tuple(d for d in read_shard(shard) if d[2] != vk)
    return build_trace(
        SPEC.id, "evict",
        inputs=[shard.id],
        outputs=[(SHARD, enc(remaining))],
        lparams=enc((vk, first, second)),
    )


# -- checker -----------------------------------------------------------------


def _check(procedure, inputs, references, lparams, outputs, lreturns, deps) -> bool:
    if references or lreturns or len(inputs) != 1:
        return False
    if procedure == "create":
        ds = dec(lparams)
        return (
            SPEC.is_type(inputs[0], "Token") and _valid_descriptors(ds)
            and len(outputs) == 2
            and outputs[0].type == TOKEN and outputs[0].payload == b""
            and outputs[1].type == SHARD and outputs[1].payload == enc(ds)
        )
    if not SPEC.is_type(inputs[0], "Shard") or len(outputs) != 1 or outputs[0].type != SHARD:
        return False
    current = read_shard(inputs[0])
    members = {d[2] for d in current}
    if procedure == "update":
        ds, sigs = dec(lparams)
        if not _valid_descriptors(ds):
            return False
        msg = enc(("MS.update", inputs[0].id, ds))
        good = {vk for vk, sig in sigs if vk in members and verify(vk, msg, sig)}
        if len(good) < 2 * faults_tolerated(len(current)) + 1:
            return False
        return outputs[0].payload == enc(ds)
    if procedure == "evict":
        vk, first, second = dec(lparams)
        if vk not in members:
            return False
        if not isinstance(first, SignedPrepared) or not isinstance(second, SignedPrepared):
            return False
        if not contradictory(first, second):
            return False
        for sp in (first, second):
            if not verify(vk, canonical_encode(sp.statement), sp.signature):
                return False
        remaining = tuple(d for d in current if d[2] != vk)
        return bool(remaining) and outputs[0].payload == enc(remaining)
    return False


CHECKER = ContractChecker(SPEC.id, SPEC.name, SPEC.types, _check)
