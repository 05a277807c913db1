"""Simulated per-shard total-order broadcast.

This stands in for the shard's BFT consensus. It keeps the contract the
protocol relies on: every non-silent replica receives the same entries in
the same order, a fixed number of rounds after submission, and duplicate
submissions are absorbed.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable

from .crypto.hashing import hash_digest
from .encoding import canonical_encode

HONEST = "Honest"
SILENT = "Silent"
EQUIVOCATOR = "Equivocator"
LIAR = "Liar"
BEHAVIORS = (HONEST, SILENT, EQUIVOCATOR, LIAR)


@dataclass(frozen=True)
class OrdererConfig:
    n: int
    f: int
    behaviors: tuple[str, ...] = ()
    latency: int = 2
    capacity: int | None = None  # entries per round; None = unbounded

    def __post_init__(self):
        if self.n < 3 * self.f + 1:
            raise ValueError(f"n={self.n} < 3f+1 with f={self.f}")
        if self.latency < 1:
            raise ValueError("latency must be at least 1")
        if self.capacity is not None and self.capacity < 1:
            raise ValueError("capacity must be positive")
        if self.behaviors and len(self.behaviors) != self.n:
            raise ValueError("one behavior per node")
        for b in self.behaviors:
            if b not in BEHAVIORS:
                raise ValueError(f"unknown behavior {b}")

    def behavior(self, node: int) -> str:
        return self.behaviors[node] if self.behaviors else HONEST

    @property
    def node_ids(self) -> range:
        return range(self.n)


@dataclass(frozen=True)
class SequencedEntry:
    seq_no: int
    message: bytes
    digest: bytes
    round: int
    obj: Any = field(default=None, compare=False, repr=False)


def message_digest(data: bytes) -> bytes:
    return hash_digest("message", data)


class Orderer:
    def __init__(self, shard: int, config: OrdererConfig, key: Callable[[Any], Hashable] | None = None):
        self.shard = shard
        self.config = config
        self._key = key
        self._seen: set[bytes] = set()
        self._pending: list[tuple[int, bytes, bytes, Any]] = []  # sorted (round, digest, data, obj)
        self._pending_keys: dict[Hashable, int] = {}
        self.log: list[SequencedEntry] = []
        self.submitted = 0
        self.absorbed = 0

    def submit(self, round_: int, message: Any, data: bytes | None = None) -> bytes:
        """Queue ``message`` (a record, or raw bytes); duplicates are absorbed."""
        if data is None:
            data = message if isinstance(message, bytes) else canonical_encode(message)
        if not data:
            raise ValueError("empty message")
        digest = message_digest(data)
        self.submitted += 1
        if digest in self._seen:
            self.absorbed += 1
            return digest
        self._seen.add(digest)
        bisect.insort(self._pending, (round_, digest, data, message))
        if self._key is not None:
            k = self._key(message)
            if k is not None:
                self._pending_keys[k] = self._pending_keys.get(k, 0) + 1
        return digest

    def has_pending(self, key: Hashable) -> bool:
        """Whether a request with this key is in the pool (replicas see the pool)."""
        return self._pending_keys.get(key, 0) > 0

    @property
    def pending_count(self) -> int:
        return len(self._pending)

    def step(self, round_: int) -> list[SequencedEntry]:
        """Entries sequenced in ``round_``: submitted at least ``latency`` rounds ago."""
        cutoff = round_ - self.config.latency
        cap = self.config.capacity
        out = []
        i = 0
        while i < len(self._pending) and self._pending[i][0] <= cutoff and (cap is None or i < cap):
            i += 1
        ready, self._pending = self._pending[:i], self._pending[i:]
        for r, digest, data, obj in ready:
            e = SequencedEntry(len(self.log), data, digest, round_, obj)
            self.log.append(e)
            out.append(e)
            if self._key is not None:
                k = self._key(obj)
                if k is not None:
                    self._pending_keys[k] -= 1
                    if not self._pending_keys[k]:
                        del self._pending_keys[k]
        return out
