"""Exponential ElGamal and Pedersen commitments over the default group."""

from __future__ import annotations

from dataclasses import dataclass

from ..encoding import record
from .group import GroupContext, default_group

MAX_DECRYPT_BOUND = 2**16


class PlaintextOutOfRange(ValueError):
    pass


@record(0x31)
@dataclass(frozen=True)
class ElGamalCiphertext:
    a: bytes  # g^r
    b: bytes  # g^m * y^r


@record(0x32)
@dataclass(frozen=True)
class PedersenCommitment:
    point: bytes  # g^m * h^r


@dataclass(frozen=True)
class Opening:
    """Secret opening of a commitment; never placed in a trace."""

    m: int
    r: int


def elgamal_keygen(seed: bytes, group: GroupContext | None = None) -> tuple[int, bytes]:
    G = group or default_group()
    dk = G.hash_to_scalar("elgamal-keygen", seed) or 1
    return dk, G.encode_element(G.gexp(dk))


def elgamal_encrypt(ek: bytes, m: int, r: int, group: GroupContext | None = None) -> ElGamalCiphertext:
    G = group or default_group()
    y = int.from_bytes(ek, "big")
    G.precompute(y)
    a = G.gexp(r)
    b = G.mul(G.gexp(m), G.exp(y, r))
    return ElGamalCiphertext(G.encode_element(a), G.encode_element(b))


def elgamal_add(c1: ElGamalCiphertext, c2: ElGamalCiphertext, group: GroupContext | None = None) -> ElGamalCiphertext:
    G = group or default_group()
    a = G.mul(int.from_bytes(c1.a, "big"), int.from_bytes(c2.a, "big"))
    b = G.mul(int.from_bytes(c1.b, "big"), int.from_bytes(c2.b, "big"))
    return ElGamalCiphertext(G.encode_element(a), G.encode_element(b))


def elgamal_sum(cts, group: GroupContext | None = None) -> ElGamalCiphertext:
    cts = list(cts)
    acc = cts[0]
    for c in cts[1:]:
        acc = elgamal_add(acc, c, group)
    return acc


_dlog_tables: dict[int, tuple[int, dict[int, int], int]] = {}


def _dlog_table(G: GroupContext, bound: int) -> dict[int, int]:
    # grown incrementally; keyed by the group modulus
    top, table, last = _dlog_tables.get(G.p, (-1, {}, 1))
    if top < bound:
        x = last if top >= 0 else 1
        i = top
        if top < 0:
            table[1] = 0
            i = 0
        while i < bound:
            x = G.mul(x, G.g)
            i += 1
            table[x] = i
        _dlog_tables[G.p] = (bound, table, x)
    return table


def elgamal_decrypt(dk: int, c: ElGamalCiphertext, bound: int, group: GroupContext | None = None) -> int:
    """Recover ``m`` in ``[0, bound]``; raises PlaintextOutOfRange otherwise."""
    G = group or default_group()
    if not 0 <= bound <= MAX_DECRYPT_BOUND:
        raise ValueError(f"decryption bound must be in [0, {MAX_DECRYPT_BOUND}]")
    a = int.from_bytes(c.a, "big")
    b = int.from_bytes(c.b, "big")
    gm = G.div(b, G.exp(a, dk))
    m = _dlog_table(G, bound).get(gm)
    if m is None or m > bound:
        raise PlaintextOutOfRange(f"plaintext exceeds bound {bound}")
    return m


def pedersen_commit(m: int, r: int, group: GroupContext | None = None) -> PedersenCommitment:
    G = group or default_group()
    return PedersenCommitment(G.encode_element(G.mul(G.gexp(m), G.hexp(r))))


def pedersen_add(c1: PedersenCommitment, c2: PedersenCommitment, group: GroupContext | None = None) -> PedersenCommitment:
    G = group or default_group()
    return PedersenCommitment(
        G.encode_element(G.mul(int.from_bytes(c1.point, "big"), int.from_bytes(c2.point, "big")))
    )


def pedersen_open(c: PedersenCommitment, opening: Opening, group: GroupContext | None = None) -> bool:
    G = group or default_group()
    return pedersen_commit(opening.m, opening.r, G) == c
