"""Seeded client workloads over genesis objects."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..contracts import cscoin, smet, svote
from ..crypto.elgamal import elgamal_encrypt, elgamal_keygen
from ..crypto.group import default_group
from ..crypto.signatures import KeyPair, keygen
from ..model import Object, Transaction, genesis_object, tx_digest
from .config import ScenarioConfig

BALANCE = 100
USERS = 16
FIRST_GENESIS_INDEX = 16  # lower indices hold the system tokens


@dataclass
class Workload:
    genesis: list[Object] = field(default_factory=list)
    schedule: list[tuple[int, Transaction]] = field(default_factory=list)
    conflict_pairs: list[tuple[bytes, bytes]] = field(default_factory=list)
    supply: int = 0


class _Builder:
    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.seed = cfg.seed.to_bytes(8, "big")
        self.rng = random.Random(f"{cfg.seed}/workload")
        self.users: list[KeyPair] = [keygen(b"user" + self.seed + i.to_bytes(4, "big")) for i in range(USERS)]
        self.keys = {u.verify_key: u for u in self.users}
        self.next_index = FIRST_GENESIS_INDEX
        self.out = Workload()

    def _genesis(self, type_, payload: bytes) -> Object:
        o = genesis_object(self.seed, self.next_index, type_, payload)
        self.next_index += 1
        self.out.genesis.append(o)
        return o

    def account(self) -> Object:
        owner = self.rng.choice(self.users).verify_key
        self.out.supply += BALANCE
        return self._genesis(cscoin.ACCOUNT, cscoin.account_payload(owner, BALANCE))

    def transfer(self, accounts: list[Object], recipient: bytes) -> Transaction:
        k = len(accounts)
        trace = cscoin.transfer(accounts, [-1] * k, [(recipient, k)], keys=self.keys)
        return Transaction((trace,), tuple(accounts))

    def recipient(self, exclude: bytes | None = None) -> bytes:
        while True:
            vk = self.rng.choice(self.users).verify_key
            if vk != exclude:
                return vk

    def cscoin_tx(self) -> Transaction:
        accounts = [self.account() for _ in range(self.cfg.inputs_per_tx)]
        return self.transfer(accounts, self.recipient())

    def conflicting_pair(self) -> tuple[Transaction, Transaction]:
        shared = self.account()
        k = self.cfg.inputs_per_tx
        a = [shared] + [self.account() for _ in range(k - 1)]
        b = [shared] + [self.account() for _ in range(k - 1)]
        ra = self.recipient()
        return self.transfer(a, ra), self.transfer(b, self.recipient(exclude=ra))

    def smet_tx(self) -> Transaction:
        key = self.rng.choice(self.users)
        meter = self._genesis(smet.METER, smet.meter_payload(key.verify_key))
        G = default_group()
        readings = [self.rng.randrange(1000) for _ in range(3)]
        blindings = [G.random_scalar(self.rng) for _ in readings]
        trace = smet.add_reading(meter, 1, smet.commit_readings(readings, blindings), key)
        return Transaction((trace,), (meter,))

    def svote_tx(self) -> Transaction:
        voter = self.rng.choice(self.users)
        tally_key = self.users[0]
        _, ek = elgamal_keygen(b"tally" + self.seed)
        G = default_group()
        cts = tuple(elgamal_encrypt(ek, 0, G.random_scalar(self.rng)) for _ in range(2))
        payload = svote.vote_payload(("yes", "no"), (voter.verify_key,), ek, tally_key.verify_key, cts, 0)
        vote = self._genesis(svote.VOTE, payload)
        trace = svote.add_vote(vote, self.rng.randrange(2), voter, seed=self.seed)
        return Transaction((trace,), (vote,))


def build_workload(cfg: ScenarioConfig) -> Workload:
    b = _Builder(cfg)
    pairs = int(round(cfg.conflict_fraction * cfg.txs / 2))
    groups: list[list[Transaction]] = []
    for _ in range(pairs):
        ta, tb = b.conflicting_pair()
        b.out.conflict_pairs.append((tx_digest(ta), tx_digest(tb)))
        groups.append([ta, tb])
    names = [c for c, _ in cfg.contract_mix]
    weights = [w for _, w in cfg.contract_mix]
    for _ in range(cfg.txs - 2 * pairs):
        kind = b.rng.choices(names, weights)[0]
        groups.append([getattr(b, f"{kind}_tx")()])
    b.rng.shuffle(groups)
    txs = [t for g in groups for t in g]
    rate = cfg.submit_rate
    b.out.schedule = [((i // rate) if rate else 0, t) for i, t in enumerate(txs)]
    return b.out
