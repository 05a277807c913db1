"""Binary Merkle trees with inclusion proofs.

Leaves are hashed under the ``leaf`` tag and interior nodes under ``node``.
A level with an odd number of nodes duplicates its last node.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..encoding import record
from .hashing import Digest, hash_digest

LEFT = 0
RIGHT = 1


class EmptyTree(ValueError):
    pass


@record(0x30)
@dataclass(frozen=True)
class MerkleProof:
    leaf_index: int
    # (sibling digest, side of the sibling: LEFT or RIGHT)
    path: tuple[tuple[bytes, int], ...]


def leaf_hash(leaf: bytes) -> Digest:
    return hash_digest("leaf", leaf)


def node_hash(left: Digest, right: Digest) -> Digest:
    return hash_digest("node", left + right)


def _levels(leaves: list[bytes]) -> list[list[Digest]]:
    if not leaves:
        raise EmptyTree("merkle tree needs at least one leaf")
    level = [leaf_hash(x) for x in leaves]
    levels = [level]
    while len(level) > 1:
        if len(level) % 2:
            level = level + [level[-1]]
        level = [node_hash(level[i], level[i + 1]) for i in range(0, len(level), 2)]
        levels.append(level)
    return levels


def merkle_root(leaves: list[bytes]) -> Digest:
    return _levels(list(leaves))[-1][0]


def merkle_prove(leaves: list[bytes], index: int) -> MerkleProof:
    levels = _levels(list(leaves))
    if not 0 <= index < len(leaves):
        raise IndexError(f"leaf index {index} out of range for {len(leaves)} leaves")
    path = []
    i = index
    for level in levels[:-1]:
        if i % 2:
            path.append((level[i - 1], LEFT))
        else:
            sibling = level[i + 1] if i + 1 < len(level) else level[i]
            path.append((sibling, RIGHT))
        i //= 2
    return MerkleProof(index, tuple(path))


def merkle_verify(root: Digest, leaf: bytes, proof: MerkleProof) -> bool:
    try:
        acc = leaf_hash(leaf)
        i = proof.leaf_index
        if i < 0 or i >= 2 ** len(proof.path) and proof.path:
            return False
        if not proof.path and i != 0:
            return False
        for sibling, side in proof.path:
            if side not in (LEFT, RIGHT) or len(sibling) != len(acc):
                return False
            # the side flag must agree with the index bit
            if side != (LEFT if i % 2 else RIGHT):
                return False
            acc = node_hash(sibling, acc) if side == LEFT else node_hash(acc, sibling)
            i //= 2
        return acc == root
    except (TypeError, ValueError):
        return False
