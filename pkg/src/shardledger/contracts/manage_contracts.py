"""ManageContracts: creation of application contracts.

A checker is named by a key into the build's fixed table of contracts, not
shipped as code. ``create`` consumes the manager token and emits a fresh
token (recording every key created so far), the contract record, its shard
mapping, and the first ``<contract>.Token``. That token is the only object
a contract may mint outside its own namespace; the contract's own ``init``
procedure consumes it later in the same transaction.
"""

from __future__ import annotations

from ..model import Object, Trace, TypeTag, build_trace, contract_id
from ..validity import ContractChecker
from .common import ContractSpec, dec, enc

SPEC = ContractSpec("ManageContracts", ("Token", "Contract", "Mapping"))
TOKEN = SPEC.tag("Token")
CONTRACT = SPEC.tag("Contract")
MAPPING = SPEC.tag("Mapping")

# checker keys compiled into this build
KNOWN_KEYS = frozenset({"CSCoin", "SMet", "SVote"})

MAPPING_RULE = "last-8-bytes-big-endian-mod-K"


def created_keys(token: Object) -> tuple[str, ...]:
    return tuple(dec(token.payload)) if token.payload else ()


def new_token_tag(key: str) -> TypeTag:
    return TypeTag(contract_id(key), "Token")


def create(token: Object, key: str, init_procedure: str = "init") -> Trace:
    keys = tuple(sorted({*created_keys(token), key}))
    cid = contract_id(key)
    return build_trace(
        SPEC.id, "create",
        inputs=[token.id],
        outputs=[
            (TOKEN, enc(keys)),
            (CONTRACT, enc((key, cid, init_procedure))),
            (MAPPING, enc((cid, MAPPING_RULE))),
            (new_token_tag(key), b""),
        ],
        lparams=enc((key, init_procedure)),
    )


def _may_emit(trace: Trace, obj: Object) -> bool:
    try:
        key, _ = dec(trace.lparams)
    except Exception:
        return False
    return trace.procedure == "create" and key in KNOWN_KEYS and obj.type == new_token_tag(key)


def _check(procedure, inputs, references, lparams, outputs, lreturns, deps) -> bool:
    if procedure != "create" or references or lreturns:
        return False
    if len(inputs) != 1 or not SPEC.is_type(inputs[0], "Token") or len(outputs) != 4:
        return False
    key, init_procedure = dec(lparams)
    if not isinstance(key, str) or not isinstance(init_procedure, str) or not init_procedure:
        return False
    previous = created_keys(inputs[0])
    if key not in KNOWN_KEYS or key in previous:
        return False
    cid = contract_id(key)
    expected = [
        (TOKEN, enc(tuple(sorted({*previous, key})))),
        (CONTRACT, enc((key, cid, init_procedure))),
        (MAPPING, enc((cid, MAPPING_RULE))),
        (new_token_tag(key), b""),
    ]
    return all(o.type == t and o.payload == p for o, (t, p) in zip(outputs, expected))


CHECKER = ContractChecker(SPEC.id, SPEC.name, SPEC.types, _check, may_emit=_may_emit)
