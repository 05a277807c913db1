"""Non-interactive sigma proofs for the private contracts.

Every challenge hashes the proof label, the caller's context bytes, the
full public statement and all prover commitments, so a proof cannot be
moved to another statement. Prover nonces are derived from the witness and
the statement, which keeps proofs reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..encoding import record
from .elgamal import ElGamalCiphertext, PedersenCommitment
from .group import GroupContext, InvalidElement, default_group


@record(0x33)
@dataclass(frozen=True)
class DleqProof:
    c: bytes
    s: bytes


@record(0x34)
@dataclass(frozen=True)
class BinaryVoteProof:
    c0: bytes
    c1: bytes
    s0: bytes
    s1: bytes


@record(0x35)
@dataclass(frozen=True)
class BillOpeningProof:
    c: bytes
    s: bytes


# Aliases naming what each equality-of-logs proof is used for.
ZeroInitProof = DleqProof
SumOneProof = DleqProof
DecryptionProof = DleqProof


def _nonce(G: GroupContext, label: str, secret: int, *parts: bytes) -> int:
    return G.hash_to_scalar("nonce/" + label, G.encode_scalar(secret), *parts) or 1


def _el(G: GroupContext, x: int) -> bytes:
    return G.encode_element(x)


def _int(b: bytes) -> int:
    return int.from_bytes(b, "big")


# -- equality of discrete logs: A1 = B1^x and A2 = B2^x ----------------------


def _dleq_prove(G, label, context, B1, A1, B2, A2, x) -> DleqProof:
    stmt = (_el(G, B1), _el(G, A1), _el(G, B2), _el(G, A2))
    w = _nonce(G, label, x, context, *stmt)
    T1 = G.exp(B1, w)
    T2 = G.exp(B2, w)
    c = G.hash_to_scalar(label, context, *stmt, _el(G, T1), _el(G, T2))
    s = (w - c * x) % G.q
    return DleqProof(G.encode_scalar(c), G.encode_scalar(s))


def _dleq_verify(G, label, context, B1, A1, B2, A2, proof: DleqProof) -> bool:
    c = G.decode_scalar(proof.c)
    s = G.decode_scalar(proof.s)
    T1 = G.mul(G.exp(B1, s), G.exp(A1, c))
    T2 = G.mul(G.exp(B2, s), G.exp(A2, c))
    stmt = (_el(G, B1), _el(G, A1), _el(G, B2), _el(G, A2))
    return c == G.hash_to_scalar(label, context, *stmt, _el(G, T1), _el(G, T2))


def _safe(fn):
    def wrapper(*args, **kwargs) -> bool:
        try:
            return bool(fn(*args, **kwargs))
        except (InvalidElement, ValueError, TypeError, AttributeError, ZeroDivisionError, OverflowError):
            return False

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _ct(G: GroupContext, ct: ElGamalCiphertext) -> tuple[int, int]:
    return G.decode_element(ct.a), G.decode_element(ct.b)


def _key(G: GroupContext, ek: bytes) -> int:
    y = G.decode_element(ek)
    G.precompute(y)
    return y


# -- zero initialisation ----------------------------------------------------


def prove_zero(ek: bytes, ct: ElGamalCiphertext, r: int, context: bytes = b"", group=None) -> DleqProof:
    G = group or default_group()
    y = _key(G, ek)
    a, b = _int(ct.a), _int(ct.b)
    return _dleq_prove(G, "zero", context, G.g, a, y, b, r)


@_safe
def verify_zero(ek: bytes, ct: ElGamalCiphertext, proof: DleqProof, context: bytes = b"", group=None) -> bool:
    """The ciphertext encrypts 0 under ``ek``."""
    G = group or default_group()
    y = _key(G, ek)
    a, b = _ct(G, ct)
    return _dleq_verify(G, "zero", context, G.g, a, y, b, proof)


# -- vector sums to one ------------------------------------------------------


def _product(G, cts: Sequence[ElGamalCiphertext]) -> tuple[int, int]:
    A = G.mul(*(_int(c.a) for c in cts))
    B = G.mul(*(_int(c.b) for c in cts))
    return A, B


def prove_sum_one(ek: bytes, cts: Sequence[ElGamalCiphertext], rs: Sequence[int], context: bytes = b"", group=None) -> DleqProof:
    G = group or default_group()
    y = _key(G, ek)
    A, B = _product(G, cts)
    R = sum(rs) % G.q
    return _dleq_prove(G, "sum-one", context + _vec(cts), G.g, A, y, G.div(B, G.g), R)


@_safe
def verify_sum_one(ek: bytes, cts: Sequence[ElGamalCiphertext], proof: DleqProof, context: bytes = b"", group=None) -> bool:
    """The plaintexts of ``cts`` sum to exactly one."""
    G = group or default_group()
    if not cts:
        return False
    y = _key(G, ek)
    for c in cts:
        _ct(G, c)
    A, B = _product(G, cts)
    return _dleq_verify(G, "sum-one", context + _vec(cts), G.g, A, y, G.div(B, G.g), proof)


def _vec(cts: Sequence[ElGamalCiphertext]) -> bytes:
    return b"".join(c.a + c.b for c in cts)


# -- correct decryption -----------------------------------------------------


def prove_decryption(dk: int, ct: ElGamalCiphertext, m: int, context: bytes = b"", group=None) -> DleqProof:
    G = group or default_group()
    y = G.gexp(dk)
    a, b = _int(ct.a), _int(ct.b)
    ctx = context + m.to_bytes(8, "big")
    return _dleq_prove(G, "decrypt", ctx, G.g, y, a, G.div(b, G.gexp(m)), dk)


@_safe
def verify_decryption(ek: bytes, ct: ElGamalCiphertext, m: int, proof: DleqProof, context: bytes = b"", group=None) -> bool:
    """``ct`` decrypts to ``m`` under the secret key matching ``ek``."""
    G = group or default_group()
    if not isinstance(m, int) or m < 0:
        return False
    y = _key(G, ek)
    a, b = _ct(G, ct)
    ctx = context + m.to_bytes(8, "big")
    return _dleq_verify(G, "decrypt", ctx, G.g, y, a, G.div(b, G.gexp(m)), proof)


# -- binary plaintext (disjunction of two equality-of-logs statements) -------


def prove_binary(ek: bytes, ct: ElGamalCiphertext, m: int, r: int, context: bytes = b"", group=None) -> BinaryVoteProof:
    if m not in (0, 1):
        raise ValueError("binary proof needs a plaintext of 0 or 1")
    G = group or default_group()
    y = _key(G, ek)
    a, b = _int(ct.a), _int(ct.b)
    targets = (b, G.div(b, G.g))  # branch k claims b / g^k = y^r
    stmt = (ct.a, ct.b, ek)
    w = _nonce(G, "binary", r, context, *stmt)
    sim = 1 - m
    c_sim = _nonce(G, "binary-c", r, context, *stmt)
    s_sim = _nonce(G, "binary-s", r, context, *stmt)
    commits: list[tuple[int, int]] = [(0, 0), (0, 0)]
    commits[m] = (G.gexp(w), G.exp(y, w))
    commits[sim] = (
        G.mul(G.gexp(s_sim), G.exp(a, c_sim)),
        G.mul(G.exp(y, s_sim), G.exp(targets[sim], c_sim)),
    )
    c = G.hash_to_scalar("binary", context, *stmt, *(_el(G, t) for pair in commits for t in pair))
    c_real = (c - c_sim) % G.q
    s_real = (w - c_real * r) % G.q
    cs = [0, 0]
    ss = [0, 0]
    cs[m], ss[m] = c_real, s_real
    cs[sim], ss[sim] = c_sim, s_sim
    return BinaryVoteProof(*(G.encode_scalar(v) for v in (cs[0], cs[1], ss[0], ss[1])))


@_safe
def verify_binary(ek: bytes, ct: ElGamalCiphertext, proof: BinaryVoteProof, context: bytes = b"", group=None) -> bool:
    """``ct`` encrypts either 0 or 1."""
    G = group or default_group()
    y = _key(G, ek)
    a, b = _ct(G, ct)
    targets = (b, G.div(b, G.g))
    c0, c1 = G.decode_scalar(proof.c0), G.decode_scalar(proof.c1)
    s0, s1 = G.decode_scalar(proof.s0), G.decode_scalar(proof.s1)
    commits = []
    for k, (ck, sk) in enumerate(((c0, s0), (c1, s1))):
        commits.append(G.mul(G.gexp(sk), G.exp(a, ck)))
        commits.append(G.mul(G.exp(y, sk), G.exp(targets[k], ck)))
    c = G.hash_to_scalar("binary", context, ct.a, ct.b, ek, *(_el(G, t) for t in commits))
    return (c0 + c1) % G.q == c


# -- bill opening -----------------------------------------------------------


def _bill_point(G, commitments: Sequence[PedersenCommitment], tariffs: Sequence[int], amount: int, check: bool) -> int:
    if len(commitments) != len(tariffs) or not commitments:
        raise ValueError("one tariff per committed reading required")
    acc = 1
    for c, t in zip(commitments, tariffs):
        point = G.decode_element(c.point) if check else _int(c.point)
        acc = G.mul(acc, G.exp(point, t))
    return G.div(acc, G.gexp(amount))


def _bill_context(context: bytes, commitments, tariffs, amount) -> bytes:
    return (
        context
        + b"".join(c.point for c in commitments)
        + b"".join(int(t).to_bytes(8, "big") for t in tariffs)
        + int(amount).to_bytes(8, "big", signed=True)
    )


def prove_bill(commitments: Sequence[PedersenCommitment], tariffs: Sequence[int], amount: int,
               blindings: Sequence[int], context: bytes = b"", group=None) -> BillOpeningProof:
    """Prove ``prod C_i^t_i = g^amount * h^R`` with ``R = sum t_i r_i``."""
    G = group or default_group()
    X = _bill_point(G, commitments, tariffs, amount, check=False)
    R = sum(t * r for t, r in zip(tariffs, blindings)) % G.q
    ctx = _bill_context(context, commitments, tariffs, amount)
    w = _nonce(G, "bill", R, ctx)
    T = G.hexp(w)
    c = G.hash_to_scalar("bill", ctx, _el(G, X), _el(G, T))
    s = (w - c * R) % G.q
    return BillOpeningProof(G.encode_scalar(c), G.encode_scalar(s))


@_safe
def verify_bill(commitments: Sequence[PedersenCommitment], tariffs: Sequence[int], amount: int,
                proof: BillOpeningProof, context: bytes = b"", group=None) -> bool:
    """The tariff-weighted sum of the committed readings equals ``amount``."""
    G = group or default_group()
    if any(not isinstance(t, int) or t < 0 for t in tariffs) or not isinstance(amount, int):
        return False
    X = _bill_point(G, commitments, tariffs, amount, check=True)
    c = G.decode_scalar(proof.c)
    s = G.decode_scalar(proof.s)
    T = G.mul(G.hexp(s), G.exp(X, c))
    ctx = _bill_context(context, commitments, tariffs, amount)
    return c == G.hash_to_scalar("bill", ctx, _el(G, X), _el(G, T))
