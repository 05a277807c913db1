"""The system and application contracts and the fixed checker table."""

from __future__ import annotations

from ..model import Object, genesis_object
from ..validity import CheckerRegistry
from . import cscoin, manage_contracts, manage_shards, smet, svote

SYSTEM = (manage_shards, manage_contracts)
APPLICATIONS = {m.SPEC.name: m for m in (cscoin, smet, svote)}

assert manage_contracts.KNOWN_KEYS == set(APPLICATIONS)


def default_registry() -> CheckerRegistry:
    reg = CheckerRegistry()
    for m in (*SYSTEM, *APPLICATIONS.values()):
        reg.register(m.CHECKER)
    return reg


def system_genesis(seed: bytes) -> list[Object]:
    """Singleton tokens of the hardcoded system contracts."""
    return [
        genesis_object(seed, 0, manage_shards.TOKEN, b""),
        genesis_object(seed, 1, manage_contracts.TOKEN, b""),
    ]


__all__ = [
    "cscoin", "manage_contracts", "manage_shards", "smet", "svote",
    "APPLICATIONS", "SYSTEM", "default_registry", "system_genesis",
]
