"""SVote: private elections over exponential ElGamal.

Vote payload: ``(options, remaining voter keys, tally encryption key,
tally verify key, running ciphertext per option, votes cast)``.

Each ballot is a vector of ciphertexts, one per option, with a proof that
every entry encrypts 0 or 1 and that the entries sum to one. The checker
multiplies ballots into the running ciphertexts without ever seeing a
plaintext; the tally is opened with one decryption proof per option.
"""

from __future__ import annotations

import random
from typing import Sequence

from ..crypto.elgamal import (
    ElGamalCiphertext,
    elgamal_add,
    elgamal_decrypt,
    elgamal_encrypt,
)
from ..crypto.group import default_group
from ..crypto.proofs import (
    BinaryVoteProof,
    DleqProof,
    prove_binary,
    prove_decryption,
    prove_sum_one,
    prove_zero,
    verify_binary,
    verify_decryption,
    verify_sum_one,
    verify_zero,
)
from ..crypto.signatures import KeyPair, sign
from ..model import Object, Trace, build_trace
from ..validity import ContractChecker
from .common import ContractSpec, dec, enc, is_bytes, is_nat, signed_by

SPEC = ContractSpec("SVote", ("Token", "Vote", "Tally"))
TOKEN = SPEC.tag("Token")
VOTE = SPEC.tag("Vote")
TALLY = SPEC.tag("Tally")


def vote_payload(options, voters, ek, tally_vk, cts, cast) -> bytes:
    return enc((tuple(options), tuple(voters), ek, tally_vk, tuple(cts), cast))


def read_vote(obj: Object):
    return dec(obj.payload)


def read_tally(obj: Object) -> tuple[tuple[str, ...], tuple[int, ...]]:
    return dec(obj.payload)


def _scalars(seed: bytes, n: int) -> list[int]:
    rng = random.Random(seed)
    G = default_group()
    return [G.random_scalar(rng) for _ in range(n)]


# -- procedures --------------------------------------------------------------


def init(token: Object) -> Trace:
    return build_trace(SPEC.id, "init", inputs=[token.id], outputs=[(TOKEN, b"")])


def create_election(token: Object, options: Sequence[str], voters: Sequence[bytes], tally_ek: bytes,
                    tally_key: KeyPair, seed: bytes = b"") -> Trace:
    options, voters = tuple(options), tuple(voters)
    rs = _scalars(b"election" + seed + token.id, len(options))
    cts = tuple(elgamal_encrypt(tally_ek, 0, r) for r in rs)
    proofs = tuple(prove_zero(tally_ek, c, r, token.id) for c, r in zip(cts, rs))
    sig = sign(tally_key, enc(("SVote.createElection", token.id, options, voters, tally_ek)))
    return build_trace(
        SPEC.id, "createElection",
        inputs=[token.id],
        outputs=[(TOKEN, b""), (VOTE, vote_payload(options, voters, tally_ek, tally_key.verify_key, cts, 0))],
        lparams=enc((options, voters, tally_ek, tally_key.verify_key, cts, proofs, sig)),
    )


def add_vote(vote: Object, choice: int, voter_key: KeyPair, seed: bytes = b"") -> Trace:
    options, voters, ek, tally_vk, running, cast = read_vote(vote)
    bits = [1 if i == choice else 0 for i in range(len(options))]
    rs = _scalars(b"ballot" + seed + vote.id + voter_key.verify_key, len(options))
    ballot = tuple(elgamal_encrypt(ek, m, r) for m, r in zip(bits, rs))
    ctx = vote.id
    binary = tuple(prove_binary(ek, c, m, r, ctx) for c, m, r in zip(ballot, bits, rs))
    sum_one = prove_sum_one(ek, ballot, rs, ctx)
    sig = sign(voter_key, enc(("SVote.addVote", vote.id, ballot)))
    remaining = tuple(v for v in voters if v != voter_key.verify_key)
    new_cts = tuple(elgamal_add(a, b) for a, b in zip(running, ballot))
    return build_trace(
        SPEC.id, "addVote",
        inputs=[vote.id],
        outputs=[(VOTE, vote_payload(options, remaining, ek, tally_vk, new_cts, cast + 1))],
        lparams=enc((voter_key.verify_key, ballot, binary, sum_one, sig)),
    )


def tally(vote: Object, dk: int, tally_key: KeyPair) -> Trace:
    options, voters, ek, tally_vk, running, cast = read_vote(vote)
    counts = tuple(elgamal_decrypt(dk, c, cast) for c in running)
    proofs = tuple(prove_decryption(dk, c, m, vote.id) for c, m in zip(running, counts))
    sig = sign(tally_key, enc(("SVote.tally", vote.id, counts)))
    return build_trace(
        SPEC.id, "tally",
        inputs=[vote.id],
        outputs=[(TALLY, enc((options, counts)))],
        lparams=enc((counts, proofs, sig)),
    )


# -- checker -----------------------------------------------------------------


def _check_create(inputs, lparams, outputs) -> bool:
    if len(inputs) != 1 or not SPEC.is_type(inputs[0], "Token") or len(outputs) != 2:
        return False
    token = inputs[0]
    options, voters, ek, tally_vk, cts, proofs, sig = dec(lparams)
    if not options or len(set(options)) != len(options) or not all(isinstance(o, str) for o in options):
        return False
    if len(set(voters)) != len(voters) or not all(is_bytes(v, 32) for v in voters):
        return False
    if len(cts) != len(options) or len(proofs) != len(options):
        return False
    if not signed_by(tally_vk, ("SVote.createElection", token.id, options, voters, ek), sig):
        return False
    for c, p in zip(cts, proofs):
        if not isinstance(c, ElGamalCiphertext) or not isinstance(p, DleqProof):
            return False
        if not verify_zero(ek, c, p, token.id):
            return False
    return (
        outputs[0].type == TOKEN and outputs[0].payload == b""
        and outputs[1].type == VOTE
        and outputs[1].payload == vote_payload(options, voters, ek, tally_vk, cts, 0)
    )


def _check_vote(vote: Object, lparams, outputs) -> bool:
    options, voters, ek, tally_vk, running, cast = read_vote(vote)
    voter, ballot, binary, sum_one, sig = dec(lparams)
    if voter not in voters:
        return False
    if len(ballot) != len(options) or len(binary) != len(options):
        return False
    if not all(isinstance(c, ElGamalCiphertext) for c in ballot):
        return False
    if not signed_by(voter, ("SVote.addVote", vote.id, ballot), sig):
        return False
    for c, p in zip(ballot, binary):
        if not isinstance(p, BinaryVoteProof) or not verify_binary(ek, c, p, vote.id):
            return False
    if not isinstance(sum_one, DleqProof) or not verify_sum_one(ek, ballot, sum_one, vote.id):
        return False
    remaining = tuple(v for v in voters if v != voter)
    new_cts = tuple(elgamal_add(a, b) for a, b in zip(running, ballot))
    return (
        len(outputs) == 1 and outputs[0].type == VOTE
        and outputs[0].payload == vote_payload(options, remaining, ek, tally_vk, new_cts, cast + 1)
    )


def _check_tally(vote: Object, lparams, outputs) -> bool:
    options, voters, ek, tally_vk, running, cast = read_vote(vote)
    counts, proofs, sig = dec(lparams)
    if len(counts) != len(options) or len(proofs) != len(options):
        return False
    if not all(is_nat(c) for c in counts) or sum(counts) != cast:
        return False
    if not signed_by(tally_vk, ("SVote.tally", vote.id, counts), sig):
        return False
    for c, m, p in zip(running, counts, proofs):
        if not isinstance(p, DleqProof) or not verify_decryption(ek, c, m, p, vote.id):
            return False
    return len(outputs) == 1 and outputs[0].type == TALLY and outputs[0].payload == enc((options, counts))


def _check(procedure, inputs, references, lparams, outputs, lreturns, deps) -> bool:
    if references or lreturns:
        return False
    if procedure == "init":
        return (
            len(inputs) == 1 and SPEC.is_type(inputs[0], "Token")
            and len(outputs) == 1 and outputs[0].type == TOKEN and outputs[0].payload == b""
        )
    if procedure == "createElection":
        return _check_create(inputs, lparams, outputs)
    if len(inputs) != 1 or not SPEC.is_type(inputs[0], "Vote"):
        return False
    if procedure == "addVote":
        return _check_vote(inputs[0], lparams, outputs)
    if procedure == "tally":
        return _check_tally(inputs[0], lparams, outputs)
    return False


CHECKER = ContractChecker(SPEC.id, SPEC.name, SPEC.types, _check)
