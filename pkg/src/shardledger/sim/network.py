"""Seeded message delivery with bounded delay and optional loss."""

from __future__ import annotations

import heapq
import random


class Network:
    def __init__(self, rng: random.Random, min_delay: int, max_delay: int, drop: float):
        self.rng = rng
        self.min_delay = min_delay
        self.max_delay = max_delay
        self.drop = drop
        self._queue: list = []  # (arrival round, send order, destination, message)
        self._order = 0
        self.sent = 0
        self.delivered = 0
        self.dropped = 0

    def send(self, round_: int, src, dest, msg, lossy: bool = True) -> None:
        self.sent += 1
        delay = self.rng.randint(self.min_delay, self.max_delay)
        if lossy and src != dest and self.drop and self.rng.random() < self.drop:
            self.dropped += 1
            return
        self._order += 1
        heapq.heappush(self._queue, (round_ + delay, self._order, dest, msg))

    def due(self, round_: int) -> list:
        out = []
        while self._queue and self._queue[0][0] <= round_:
            _, _, dest, msg = heapq.heappop(self._queue)
            out.append((dest, msg))
        self.delivered += len(out)
        return out

    @property
    def pending(self) -> int:
        return len(self._queue)

    def balanced(self) -> bool:
        """Every sent message is delivered, dropped or still in flight."""
        return self.sent == self.delivered + self.dropped + self.pending
