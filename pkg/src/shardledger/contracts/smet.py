"""SMet: private smart-meter billing.

Meter payload: ``(meter verify key, readings, billed periods)`` where
``readings`` is a tuple of ``(period, commitments)``. Readings are Pedersen
commitments; a bill reveals only the tariff-weighted total, with a proof
that it opens the committed readings.
"""

from __future__ import annotations

from typing import Sequence

from ..crypto.elgamal import PedersenCommitment, pedersen_commit
from ..crypto.proofs import BillOpeningProof, prove_bill, verify_bill
from ..crypto.signatures import KeyPair, sign
from ..model import Object, Trace, build_trace
from ..validity import ContractChecker
from .common import ContractSpec, dec, enc, is_bytes, is_nat, signed_by

SPEC = ContractSpec("SMet", ("Token", "Meter", "Bill"))
TOKEN = SPEC.tag("Token")
METER = SPEC.tag("Meter")
BILL = SPEC.tag("Bill")


def meter_payload(vk: bytes, readings=(), billed=()) -> bytes:
    return enc((vk, tuple(readings), tuple(billed)))


def read_meter(obj: Object):
    vk, readings, billed = dec(obj.payload)
    return vk, readings, billed


def read_bill(obj: Object) -> tuple[int, bytes, int]:
    amount, vk, period = dec(obj.payload)
    return amount, vk, period


def _bill_context(vk: bytes, period: int) -> bytes:
    return enc(("SMet.bill", vk, period))


# -- procedures --------------------------------------------------------------


def init(token: Object) -> Trace:
    return build_trace(SPEC.id, "init", inputs=[token.id], outputs=[(TOKEN, b"")])


def create_meter(token: Object, meter_key: KeyPair) -> Trace:
    vk = meter_key.verify_key
    sig = sign(meter_key, enc(("SMet.createMeter", vk, token.id)))
    return build_trace(
        SPEC.id, "createMeter",
        inputs=[token.id],
        outputs=[(TOKEN, b""), (METER, meter_payload(vk))],
        lparams=enc((vk, sig)),
    )


def commit_readings(readings: Sequence[int], blindings: Sequence[int]) -> tuple[PedersenCommitment, ...]:
    return tuple(pedersen_commit(m, r) for m, r in zip(readings, blindings))


def add_reading(meter: Object, period: int, commitments: Sequence[PedersenCommitment], meter_key: KeyPair) -> Trace:
    vk, readings, billed = read_meter(meter)
    commitments = tuple(commitments)
    sig = sign(meter_key, enc(("SMet.addReading", meter.id, period, commitments)))
    return build_trace(
        SPEC.id, "addReading",
        inputs=[meter.id],
        outputs=[(METER, meter_payload(vk, (*readings, (period, commitments)), billed))],
        lparams=enc((period, commitments, sig)),
    )


def compute_bill(meter: Object, period: int, tariffs: Sequence[int], readings: Sequence[int],
                 blindings: Sequence[int]) -> Trace:
    """Bill ``period``; ``readings`` and ``blindings`` stay with the caller."""
    vk, stored, billed = read_meter(meter)
    commitments = dict(stored)[period]
    tariffs = tuple(int(t) for t in tariffs)
    amount = sum(t * m for t, m in zip(tariffs, readings))
    proof = prove_bill(commitments, tariffs, amount, blindings, _bill_context(vk, period))
    return build_trace(
        SPEC.id, "computeBill",
        inputs=[meter.id],
        outputs=[
            (METER, meter_payload(vk, stored, (*billed, period))),
            (BILL, enc((amount, vk, period))),
        ],
        lparams=enc((period, tariffs, amount, proof)),
    )


# -- checker -----------------------------------------------------------------


def _check(procedure, inputs, references, lparams, outputs, lreturns, deps) -> bool:
    if references or lreturns:
        return False
    if procedure == "init":
        return (
            len(inputs) == 1 and SPEC.is_type(inputs[0], "Token")
            and len(outputs) == 1 and outputs[0].type == TOKEN and outputs[0].payload == b""
        )
    if procedure == "createMeter":
        if len(inputs) != 1 or not SPEC.is_type(inputs[0], "Token") or len(outputs) != 2:
            return False
        vk, sig = dec(lparams)
        return (
            is_bytes(vk, 32)
            and signed_by(vk, ("SMet.createMeter", vk, inputs[0].id), sig)
            and outputs[0].type == TOKEN and outputs[0].payload == b""
            and outputs[1].type == METER and outputs[1].payload == meter_payload(vk)
        )
    if len(inputs) != 1 or not SPEC.is_type(inputs[0], "Meter"):
        return False
    meter = inputs[0]
    vk, readings, billed = read_meter(meter)
    periods = dict(readings)
    if procedure == "addReading":
        period, commitments, sig = dec(lparams)
        if not is_nat(period) or period in periods or not commitments:
            return False
        if not all(isinstance(c, PedersenCommitment) for c in commitments):
            return False
        if not signed_by(vk, ("SMet.addReading", meter.id, period, commitments), sig):
            return False
        return (
            len(outputs) == 1 and outputs[0].type == METER
            and outputs[0].payload == meter_payload(vk, (*readings, (period, commitments)), billed)
        )
    if procedure == "computeBill":
        period, tariffs, amount, proof = dec(lparams)
        if period not in periods or period in billed or not isinstance(proof, BillOpeningProof):
            return False
        if not isinstance(amount, int) or not all(is_nat(t) for t in tariffs):
            return False
        if not verify_bill(periods[period], tariffs, amount, proof, _bill_context(vk, period)):
            return False
        return (
            len(outputs) == 2
            and outputs[0].type == METER and outputs[0].payload == meter_payload(vk, readings, (*billed, period))
            and outputs[1].type == BILL and outputs[1].payload == enc((amount, vk, period))
        )
    return False


CHECKER = ContractChecker(SPEC.id, SPEC.name, SPEC.types, _check)
