"""Timings of contract procedures and checkers."""

from __future__ import annotations

import random
import time

from .contracts import cscoin, default_registry, manage_contracts, smet, svote
from .crypto.elgamal import elgamal_keygen
from .crypto.group import default_group
from .crypto.signatures import _verify_cached, keygen
from .model import Object, Trace, genesis_object
from .validity import ContractChecker

SEED = b"bench"


def _token(i: int, tag) -> Object:
    return genesis_object(SEED, i, tag, b"")


def _time(fn, reps: int) -> tuple[float, object]:
    out = None
    start = time.perf_counter()
    for _ in range(reps):
        out = fn()
    return (time.perf_counter() - start) / reps * 1000.0, out


def _checker_time(checker: ContractChecker, trace: Trace, inputs, refs, reps: int) -> tuple[float, bool]:
    def once():
        _verify_cached.cache_clear()  # time real verification, not the memo
        return checker.run(trace, tuple(inputs), tuple(refs))

    ms, ok = _time(once, reps)
    return ms, bool(ok)


def bench_contracts(reps: int = 5) -> str:
    reg = default_registry()
    rng = random.Random(7)
    G = default_group()
    alice, bob = keygen(b"alice"), keygen(b"bob")
    rows = []

    def row(name, proc_ms, contract, trace, inputs, refs=()):
        check_ms, ok = _checker_time(reg.get(contract), trace, inputs, refs, reps)
        rows.append((name, proc_ms, check_ms, ok))

    acc_a = genesis_object(SEED, 10, cscoin.ACCOUNT, cscoin.account_payload(alice.verify_key, 10))
    acc_b = genesis_object(SEED, 11, cscoin.ACCOUNT, cscoin.account_payload(bob.verify_key, 5))
    keys = {alice.verify_key: alice, bob.verify_key: bob}
    ms, t = _time(lambda: cscoin.transfer([acc_a, acc_b], [-3, 3], keys=keys), reps)
    row("CSCoin.transfer", ms, cscoin.SPEC.id, t, [acc_a, acc_b])

    mc = _token(1, manage_contracts.TOKEN)
    ms, t = _time(lambda: manage_contracts.create(mc, "SMet"), reps)
    row("MC.create", ms, manage_contracts.SPEC.id, t, [mc])

    smet_token = _token(20, smet.TOKEN)
    ms, t = _time(lambda: smet.create_meter(smet_token, alice), reps)
    row("SMet.createMeter", ms, smet.SPEC.id, t, [smet_token])
    meter = t.outputs[1]
    readings = [rng.randrange(1000) for _ in range(3)]
    blindings = [G.random_scalar(rng) for _ in readings]
    commitments = smet.commit_readings(readings, blindings)
    ms, t = _time(lambda: smet.add_reading(meter, 1, commitments, alice), reps)
    row("SMet.addReading", ms, smet.SPEC.id, t, [meter])
    read_meter = t.outputs[0]
    ms, t = _time(lambda: smet.compute_bill(read_meter, 1, [5, 10, 2], readings, blindings), reps)
    row("SMet.computeBill", ms, smet.SPEC.id, t, [read_meter])

    dk, ek = elgamal_keygen(b"bench-tally")
    vote_token = _token(30, svote.TOKEN)
    voters = [alice.verify_key, bob.verify_key]
    ms, t = _time(lambda: svote.create_election(vote_token, ["yes", "no"], voters, ek, alice), reps)
    row("SVote.createElection", ms, svote.SPEC.id, t, [vote_token])
    vote = t.outputs[1]
    ms, t = _time(lambda: svote.add_vote(vote, 0, bob), reps)
    row("SVote.addVote", ms, svote.SPEC.id, t, [vote])
    voted = t.outputs[0]
    ms, t = _time(lambda: svote.tally(voted, dk, alice), reps)
    row("SVote.tally", ms, svote.SPEC.id, t, [voted])

    lines = ["operation\tprocedure_ms\tchecker_ms\tchecker_accepts"]
    lines += [f"{n}\t{p:.2f}\t{c:.2f}\t{ok}" for n, p, c, ok in rows]
    return "\n".join(lines) + "\n"
