"""Helpers shared by the contract modules."""

from __future__ import annotations

from typing import Any

from ..crypto.signatures import verify
from ..encoding import canonical_decode, canonical_encode
from ..model import ContractId, Object, TypeTag, contract_id

enc = canonical_encode


def dec(data: bytes) -> Any:
    return canonical_decode(data)


class ContractSpec:
    """Name, id and type tags of one contract."""

    def __init__(self, name: str, types: tuple[str, ...]):
        self.name = name
        self.id: ContractId = contract_id(name)
        self.types = frozenset(types)

    def tag(self, type_name: str) -> TypeTag:
        if type_name not in self.types:
            raise ValueError(f"{self.name} has no type {type_name}")
        return TypeTag(self.id, type_name)

    def is_type(self, obj: Object, type_name: str) -> bool:
        return obj.type.contract == self.id and obj.type.name == type_name


def signed_by(vk: bytes, message: Any, sig: bytes) -> bool:
    return verify(vk, canonical_encode(message), sig)


def is_nat(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool) and x >= 0


def is_bytes(x, size: int | None = None) -> bool:
    return isinstance(x, bytes) and (size is None or len(x) == size)
