"""Prime-order subgroup of Z_p^* used for commitments, encryption and proofs.

The parameters are derived from a public seed: ``q`` is a 256-bit prime,
``p = k*q + 1`` a 2048-bit prime, and ``g``, ``h`` are hashed into the
order-``q`` subgroup, so nobody knows ``log_g(h)``.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2
from gmpy2 import mpz

from .hashing import hash_digest

GROUP_SEED = b"shardledger/group/v1"

_Q = 0x8530B2BBC420E66FBF45214B56BF4B7F74184FB32211446973F089B63E684FF3
_P = int(
    "9c077843d4b8bd03b0ee65353c64ff63a605284efc51189a994c73dbf18e95129f71551bb13bb857"
    "004418ebb726175140c83b465eccfb7909af1b143120c281414eac6ea0ceb33b12fb57dd12344022"
    "9738e3543cdfe661bf108169ca593385af539c39c94aebf8f205f0a78e0133987534d25d80769715"
    "09172d0f8eb706c0e9626344389c280081ddbe1070fb39c149006955190b8b451d61ff97ffd466b4"
    "3b05287baa94e147d84aa0aeb294f46d28afa7d92baa3c59cfcd84492cc92eac7636acf750d80ae5"
    "6832e4ed56087f113a6471696ff92886980f32155129be8df0a021be291337749c5cbfa2d329cfd9"
    "119c88cd14782aa58a1f046c62eab3f1",
    16,
)
_G = int(
    "91d06aa63c35cd4a95f05db8fd059fdd795a1caf17997e9ccceab0fc28207e8224f25831c7c5bc93"
    "53cdb47525f55dcca9c045a40c7e412060ffa90aa00a3ae545bdf29249e6deac97ec4687bf139937"
    "5741e2c2f5bb56bc05d747cf7a3a61b35ac170b3875b49610a6c8af33e31aa00efbfa14c2e85143e"
    "bf299cb959c3dfa127127f288a2772ca3b599687c22ab1073e580f45ac028e01e7ad500282760fda"
    "99d3985874f4826c0275ba9f073f7b15ef3f2130bd65fc4547bf5805396bb3263907793d4adcc133"
    "149e932abd44783bd100a8576cbde86c1663a37722f76e2d33916696ab268c64f59f6956ec0c42e7"
    "477019a1ec84b4cb9e754b03088e03e4",
    16,
)
_H = int(
    "87c9885cb340325c1429431edf841c15b6fd94117b6914e14f39335373600474c5abba3fe563f37c"
    "72646e63c11d35ccf2f4e7231e190d05dd27bad4945b33363d56b1791dde257c88a1c5552d1cd3af"
    "84064d3c1515a5e25087adf45f0853c694c7e78dc08ae36685181a317b71683d3dcb59e705f0d6f2"
    "985c7c31f26076b1d0f571e7a64117e5aa530af0190e35a9546fc2e1f40cf03bc3b4f5cf5e6d1a64"
    "e5fa383d9cb723544e6f22b15de064b9a52f1da919756a4f5f4d54de165650ec37bd0c2766bbf8fb"
    "c8f5129e4c4e0c777f951ed91acdd6dbb70234c3d661b71816fbb80c7f75080414f2580caf5134a4"
    "0c6c8a658d24ad2238d22a89f4031c24",
    16,
)

_WINDOW = 8


class InvalidElement(ValueError):
    pass


def _expand(seed: bytes, label: bytes, bits: int) -> int:
    out = b""
    i = 0
    while len(out) * 8 < bits:
        out += hashlib.sha256(seed + b"/" + label + i.to_bytes(4, "big")).digest()
        i += 1
    return int.from_bytes(out, "big") >> (len(out) * 8 - bits)


def derive_parameters(seed: bytes = GROUP_SEED, pbits: int = 2048, qbits: int = 256) -> tuple[int, int, int, int]:
    """Regenerate ``(p, q, g, h)`` from ``seed``."""
    q = gmpy2.next_prime(mpz(_expand(seed, b"q", qbits) | (1 << (qbits - 1))))
    x = mpz(_expand(seed, b"p", pbits) | (1 << (pbits - 1)))
    p = x - (x % (2 * q)) + 1
    while not gmpy2.is_prime(p, 40):
        p += 2 * q

    def to_subgroup(label: bytes) -> mpz:
        c = 0
        while True:
            raw = mpz(_expand(seed, label + c.to_bytes(4, "big"), pbits + 64)) % p
            v = gmpy2.powmod(raw, (p - 1) // q, p)
            if v != 1:
                return v
            c += 1

    return int(p), int(q), int(to_subgroup(b"g")), int(to_subgroup(b"h"))


class _FixedBase:
    """Windowed table of ``base^(d * 2^(8i))`` for fast fixed-base powers."""

    def __init__(self, base: int, p: mpz, ebits: int):
        self.p = p
        rows = []
        b = mpz(base)
        for _ in range((ebits + _WINDOW - 1) // _WINDOW):
            row = [mpz(1)]
            for _ in range((1 << _WINDOW) - 1):
                row.append(row[-1] * b % p)
            rows.append(row)
            b = row[-1] * b % p
        self.rows = rows

    def pow(self, e: int) -> mpz:
        r = mpz(1)
        p = self.p
        i = 0
        mask = (1 << _WINDOW) - 1
        while e:
            d = e & mask
            if d:
                r = r * self.rows[i][d] % p
            e >>= _WINDOW
            i += 1
        return r


@dataclass(frozen=True)
class GroupContext:
    p: int
    q: int
    g: int
    h: int
    _tables: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    @property
    def element_size(self) -> int:
        return (self.p.bit_length() + 7) // 8

    @property
    def scalar_size(self) -> int:
        return (self.q.bit_length() + 7) // 8

    def describe(self) -> str:
        return f"schnorr-subgroup p={self.p.bit_length()}b q={self.q.bit_length()}b seed={GROUP_SEED.decode()}"

    # arithmetic

    def precompute(self, base: int) -> None:
        if base not in self._tables:
            if len(self._tables) >= 64:
                # keep g and h, drop per-key tables
                for k in [k for k in self._tables if k not in (self.g, self.h)]:
                    del self._tables[k]
            self._tables[base] = _FixedBase(base, mpz(self.p), self.q.bit_length())

    def exp(self, base: int, e: int) -> int:
        e %= self.q
        table = self._tables.get(base)
        if table is not None:
            return int(table.pow(e))
        return int(gmpy2.powmod(mpz(base), e, mpz(self.p)))

    def gexp(self, e: int) -> int:
        self.precompute(self.g)
        return self.exp(self.g, e)

    def hexp(self, e: int) -> int:
        self.precompute(self.h)
        return self.exp(self.h, e)

    def mul(self, *elems: int) -> int:
        p = mpz(self.p)
        r = mpz(1)
        for x in elems:
            r = r * x % p
        return int(r)

    def inv(self, x: int) -> int:
        return int(gmpy2.invert(mpz(x), mpz(self.p)))

    def div(self, a: int, b: int) -> int:
        return self.mul(a, self.inv(b))

    def is_element(self, x) -> bool:
        if not isinstance(x, int) or not 1 <= x < self.p:
            return False
        return gmpy2.powmod(mpz(x), mpz(self.q), mpz(self.p)) == 1

    # encodings

    def encode_element(self, x: int) -> bytes:
        return int(x).to_bytes(self.element_size, "big")

    def decode_element(self, data: bytes) -> int:
        if not isinstance(data, bytes) or len(data) != self.element_size:
            raise InvalidElement("wrong element length")
        x = int.from_bytes(data, "big")
        if not self.is_element(x):
            raise InvalidElement("not in the prime-order subgroup")
        return x

    def encode_scalar(self, s: int) -> bytes:
        return (int(s) % self.q).to_bytes(self.scalar_size, "big")

    def decode_scalar(self, data: bytes) -> int:
        if not isinstance(data, bytes) or len(data) != self.scalar_size:
            raise InvalidElement("wrong scalar length")
        s = int.from_bytes(data, "big")
        if s >= self.q:
            raise InvalidElement("scalar not reduced")
        return s

    def hash_to_scalar(self, tag: str, *parts: bytes) -> int:
        h = hashlib.sha256()
        for part in parts:
            h.update(len(part).to_bytes(4, "big"))
            h.update(part)
        inner = h.digest()
        wide = hash_digest(tag, b"\x00" + inner) + hash_digest(tag, b"\x01" + inner)
        return int.from_bytes(wide, "big") % self.q

    def random_scalar(self, rng) -> int:
        """Uniform non-zero scalar from a ``random.Random``-like source."""
        return rng.randrange(1, self.q)


@lru_cache(maxsize=1)
def default_group() -> GroupContext:
    return GroupContext(_P, _Q, _G, _H)
