"""Offline audits over exported node hash-chains.

``full_audit`` replays a shard's log with the honest node logic and flags
every logged action the replay would not have taken. ``cross_audit``
checks the promises one shard's log holds from another against that
shard's own replay. ``partial_audit`` answers a single-transaction query
with a Merkle inclusion proof under a threshold-signed head.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .chain import (
    AbortedTx,
    AcceptRefused,
    AcceptSeen,
    ChainHeader,
    Checkpoint,
    CommittedTx,
    ObjectCreated,
    PrepareSeen,
    PromiseSeen,
    ShardDecision,
    chain_head,
    decision_signers,
    entries_root,
    entry_leaf,
)
from .crypto.hashing import ZERO_DIGEST
from .crypto.merkle import MerkleProof, merkle_prove, merkle_verify
from .crypto.signatures import KeyPair, sign, verify
from .encoding import EncodingError, canonical_encode, decode_stream, record
from .messages import AcceptMsg, SignedPrepared, statement_valid
from .model import tx_digest
from .sbac import ProtocolConfig, create_problem, decide, evidence_problem
from .shard import ShardStore, concerned_shards
from .validity import CheckerRegistry


class ChainFormatError(ValueError):
    """The bytes are not a readable chain export."""


@dataclass(frozen=True)
class Finding:
    seq_no: int
    kind: str
    detail: str

    def line(self) -> str:
        return f"{self.seq_no}\t{self.kind}\t{self.detail}"


@dataclass
class Chain:
    header: ChainHeader
    checkpoints: list[Checkpoint]
    decisions: list[ShardDecision]

    @property
    def shard(self) -> int:
        return self.header.shard

    def config(self) -> ProtocolConfig:
        h = self.header
        return ProtocolConfig(h.K, len(h.key_sets[h.shard]), h.f, h.key_sets, fee_min=h.fee_min)


def read_chain(data: bytes) -> Chain:
    try:
        items = decode_stream(data)
    except (EncodingError, ValueError, TypeError) as e:
        raise ChainFormatError(f"undecodable chain: {e}") from None
    if not items or not isinstance(items[0], ChainHeader):
        raise ChainFormatError("missing chain header")
    cps, decs = [], []
    for item in items[1:]:
        if not (isinstance(item, tuple) and len(item) == 2
                and isinstance(item[0], Checkpoint) and isinstance(item[1], ShardDecision)):
            raise ChainFormatError("expected (checkpoint, decision) pairs")
        cps.append(item[0])
        decs.append(item[1])
    h = items[0]
    if not (0 <= h.shard < h.K == len(h.key_sets)):
        raise ChainFormatError("header shard outside its key sets")
    return Chain(h, cps, decs)


def load_chain(path) -> Chain:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise ChainFormatError(f"unreadable chain file: {e}") from None
    return read_chain(data)


def check_linkage(chain: Chain) -> list[Finding]:
    """Head recomputation and linkage; stops at the first broken checkpoint."""
    keys = chain.header.key_sets[chain.shard]
    findings = []
    prev = None
    for cp, dec in zip(chain.checkpoints, chain.decisions):
        expected = 0 if prev is None else prev.seq_no + 1
        prev_head = ZERO_DIGEST if prev is None else prev.head
        problem = None
        if cp.seq_no != expected:
            problem = f"sequence number {cp.seq_no}, expected {expected}"
        elif cp.shard != chain.shard:
            problem = f"checkpoint of shard {cp.shard}"
        elif cp.prev_head != prev_head:
            problem = "previous head does not match"
        elif entries_root(cp.entries) != cp.merkle_root:
            problem = "merkle root does not match the entries"
        elif chain_head(cp.merkle_root, cp.seq_no, cp.prev_head) != cp.head:
            problem = "head does not match its fields"
        if problem:
            findings.append(Finding(expected, "ChainBroken", problem))
            return findings
        if (dec.shard, dec.seq_no, dec.head) != (cp.shard, cp.seq_no, cp.head):
            findings.append(Finding(cp.seq_no, "DecisionMismatch", "signed head differs from the checkpoint"))
        elif len(decision_signers(dec, keys)) < chain.header.f + 1:
            findings.append(Finding(cp.seq_no, "WeakDecision", "fewer than f+1 valid head signatures"))
        prev = cp
    return findings


@dataclass
class Replay:
    """Honest re-execution of one shard's log."""

    chain: Chain
    registry: CheckerRegistry
    findings: list[Finding] = field(default_factory=list)
    # tx digest -> (commit, reason, seq_no of the checkpoint holding PrepareSeen)
    decisions: dict = field(default_factory=dict)
    accepted: dict = field(default_factory=dict)

    def __post_init__(self):
        self.cfg = self.chain.config()
        self.store = ShardStore(self.chain.shard, self.chain.header.K, self.chain.header.genesis)
        self.store.strict = False
        self._promises: list[SignedPrepared] = []
        self._txs: dict = {}

    def _flag(self, seq_no: int, kind: str, detail: str) -> None:
        self.findings.append(Finding(seq_no, kind, detail))

    def run(self) -> "Replay":
        for cp in self.chain.checkpoints:
            for e in cp.entries:
                try:
                    self.step(cp.seq_no, e)
                except Exception as exc:  # a log no honest node could produce
                    self._flag(cp.seq_no, "ReplayError", f"{type(exc).__name__}: {exc}")
        return self

    def step(self, seq_no: int, e) -> None:
        shard = self.chain.shard
        if isinstance(e, PrepareSeen):
            d = tx_digest(e.tx)
            if d in self.decisions or d in self.accepted:
                self._flag(seq_no, "DuplicatePrepare", d.hex())
                return
            if shard not in concerned_shards(e.tx, self.cfg.K):
                self._flag(seq_no, "UnconcernedPrepare", d.hex())
                return
            self._txs[d] = e.tx
            dec = decide(self.store, e.tx, self.registry, self.cfg.fee_min)
            self.decisions[d] = (dec.commit, dec.reason, seq_no)
            if dec.commit:
                self.store.lock(d, e.tx)
        elif isinstance(e, PromiseSeen):
            sp = e.prepared
            st = sp.statement
            if not statement_valid(sp, self.cfg.key_sets):
                self._flag(seq_no, "BadSignature", f"{st.shard}/{st.node} on {st.tx.hex()}")
            elif st.shard == shard and st.tx in self.decisions and self.decisions[st.tx][0] != st.commit:
                self._flag(seq_no, "PromiseMismatch",
                           f"node {st.node} promised {_word(st.commit)} on {st.tx.hex()}, replay says {_word(not st.commit)}")
            self._promises.append(sp)
        elif isinstance(e, AcceptSeen):
            d = tx_digest(e.tx)
            problem = evidence_problem(AcceptMsg(e.tx, e.commit, tuple(self._promises)), self.cfg)
            self._promises = []
            if problem:
                self._flag(seq_no, "BadEvidence", f"{d.hex()}: {problem}")
            if d in self.accepted:
                self._flag(seq_no, "DuplicateAccept", d.hex())
            self.accepted[d] = e.commit
            self._txs.setdefault(d, e.tx)
        elif isinstance(e, CommittedTx):
            d = tx_digest(e.tx)
            if self.accepted.get(d) is not True:
                self._flag(seq_no, "UnacceptedCommit", d.hex())
            own = self.decisions.get(d)
            if own is None:
                self._flag(seq_no, "CommitWithoutPrepare", d.hex())
            elif not own[0]:
                self._flag(seq_no, "CommitAgainstDecision", f"{d.hex()}: replay decided abort ({own[1]})")
            self.store.consume_and_create(d, e.tx)
        elif isinstance(e, AbortedTx):
            if self.accepted.get(e.tx) is not False:
                self._flag(seq_no, "UnacceptedAbort", e.tx.hex())
            tx = self._txs.get(e.tx)
            if tx is not None:
                self.store.release(e.tx, tx)
        elif isinstance(e, AcceptRefused):
            d = tx_digest(e.accept.tx)
            if d not in self.accepted and evidence_problem(e.accept, self.cfg) is None:
                self._flag(seq_no, "WrongRefusal", d.hex())
        elif isinstance(e, ObjectCreated):
            problem = create_problem(e.request, shard, self.cfg)
            if problem:
                self._flag(seq_no, "BadCreate", f"{e.request.object.id.hex()}: {problem}")
            else:
                self.store.create(e.request.object)
        else:
            self._flag(seq_no, "UnknownEntry", type(e).__name__)


def _word(commit: bool) -> str:
    return "commit" if commit else "abort"


def full_audit(chain: Chain, registry: CheckerRegistry) -> list[Finding]:
    """Linkage findings followed by replay divergences."""
    findings = check_linkage(chain)
    if any(f.kind == "ChainBroken" for f in findings):
        return findings
    return findings + Replay(chain, registry).run().findings


# -- cross audit ---------------------------------------------------------------


@dataclass(frozen=True)
class AuditVerdict:
    guilty: int | None
    tx: bytes = b""
    statements: tuple[SignedPrepared, ...] = ()
    decision: ShardDecision | None = None
    detail: str = ""
    notes: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.guilty is None

    def render(self) -> str:
        lines = [f"note\t{n}" for n in self.notes]
        if self.ok:
            lines.append("verdict\tOk")
            return "\n".join(lines)
        lines.append(f"verdict\tGuilty\tshard {self.guilty}")
        lines.append(f"tx\t{self.tx.hex()}")
        lines.append(f"detail\t{self.detail}")
        for sp in self.statements:
            st = sp.statement
            lines.append(f"statement\t{st.shard}/{st.node}\t{_word(st.commit)}\t{sp.signature.hex()}")
        if self.decision is not None:
            d = self.decision
            lines.append(f"signed-head\t{d.shard}\t{d.seq_no}\t{d.head.hex()}\t{len(d.signatures)} signatures")
        return "\n".join(lines)


class ChainInvalid(ValueError):
    pass


def _promises_about(accuser: Chain, shard: int, key_sets) -> dict:
    """(tx, commit) -> {node: signed promise} for valid promises by ``shard``."""
    out: dict = {}
    for cp in accuser.checkpoints:
        for e in cp.entries:
            if isinstance(e, PromiseSeen) and e.prepared.statement.shard == shard:
                st = e.prepared.statement
                if statement_valid(e.prepared, key_sets):
                    out.setdefault((st.tx, st.commit), {}).setdefault(st.node, e.prepared)
    return out


def _convict(accuser: Chain, accused: Chain, replay: Replay) -> AuditVerdict | None:
    f = accused.header.f
    promises = _promises_about(accuser, accused.shard, accuser.header.key_sets)
    for (tx, commit), by_node in sorted(promises.items()):
        if len(by_node) < f + 1:
            continue  # below the shard threshold: at most a faulty node, not the shard
        own = replay.decisions.get(tx)
        if own is None or own[0] == commit:
            continue
        seq_no = own[2]
        decision = accused.decisions[seq_no]
        statements = tuple(by_node[i] for i in sorted(by_node)[: f + 1])
        detail = (
            f"shard {accused.shard} promised {_word(commit)} but its own log replays to "
            f"{_word(own[0])} at checkpoint {seq_no}" + (f" ({own[1]})" if own[1] else "")
        )
        return AuditVerdict(accused.shard, tx, statements, decision, detail)
    return None


def cross_audit(a: Chain, b: Chain, registry: CheckerRegistry) -> AuditVerdict:
    for c in (a, b):
        broken = [x for x in check_linkage(c) if x.kind == "ChainBroken"]
        if broken:
            raise ChainInvalid(f"shard {c.shard}: {broken[0].detail} at checkpoint {broken[0].seq_no}")
    if a.header.key_sets != b.header.key_sets or a.header.K != b.header.K or a.header.f != b.header.f:
        raise ChainInvalid("chains disagree on the shard configuration")
    replays = {c.shard: Replay(c, registry).run() for c in (a, b)}
    for accuser, accused in ((a, b), (b, a)):
        if accuser.shard == accused.shard:
            continue
        verdict = _convict(accuser, accused, replays[accused.shard])
        if verdict is not None:
            return verdict
    notes = []
    if len(a.checkpoints) != len(b.checkpoints):
        short = a if len(a.checkpoints) < len(b.checkpoints) else b
        notes.append(f"shard {short.shard} chain ends at checkpoint {len(short.checkpoints) - 1}; "
                     "compared over the overlapping prefix")
    return AuditVerdict(None, notes=tuple(notes))


# -- partial audit ---------------------------------------------------------------


@record(0x6A)
@dataclass(frozen=True)
class UnknownTx:
    shard: int
    node: int
    tx: bytes
    seq_no: int  # last checkpoint searched
    head: bytes


@record(0x6B)
@dataclass(frozen=True)
class PartialAuditProof:
    tx: bytes
    decision: ShardDecision | None
    entry: object
    merkle_root: bytes
    prev_head: bytes
    inclusion: MerkleProof | None
    unknown: UnknownTx | None = None
    unknown_signature: bytes = b""


def _outcome_entry_tx(e) -> bytes | None:
    if isinstance(e, CommittedTx):
        return tx_digest(e.tx)
    if isinstance(e, AbortedTx):
        return e.tx
    return None


def partial_audit(chain: Chain, tx: bytes, key: KeyPair) -> PartialAuditProof:
    """Answer from one node: an inclusion proof, or a signed UnknownTx."""
    f = chain.header.f
    for cp, dec in zip(chain.checkpoints, chain.decisions):
        for i, e in enumerate(cp.entries):
            if _outcome_entry_tx(e) == tx:
                proof = merkle_prove([entry_leaf(x) for x in cp.entries], i)
                trimmed = ShardDecision(dec.shard, dec.seq_no, dec.head, tuple(sorted(dec.signatures))[: f + 1])
                return PartialAuditProof(tx, trimmed, e, cp.merkle_root, cp.prev_head, proof)
    last = chain.checkpoints[-1] if chain.checkpoints else None
    st = UnknownTx(chain.shard, chain.header.node, tx, last.seq_no if last else -1, last.head if last else ZERO_DIGEST)
    return PartialAuditProof(tx, None, None, b"", b"", None, st, sign(key, canonical_encode(st)))


def verify_partial(proof: PartialAuditProof, keys, f: int, tx: bytes | None = None) -> bool:
    """Check a partial-audit answer against a shard's verify keys."""
    try:
        if tx is not None and proof.tx != tx:
            return False
        if proof.unknown is not None:
            st = proof.unknown
            return st.tx == proof.tx and 0 <= st.node < len(keys) and verify(
                keys[st.node], canonical_encode(st), proof.unknown_signature)
        dec = proof.decision
        if dec is None or proof.inclusion is None:
            return False
        if _outcome_entry_tx(proof.entry) != proof.tx:
            return False
        if chain_head(proof.merkle_root, dec.seq_no, proof.prev_head) != dec.head:
            return False
        if len(decision_signers(dec, keys)) < f + 1:
            return False
        return merkle_verify(proof.merkle_root, entry_leaf(proof.entry), proof.inclusion)
    except (AttributeError, TypeError, ValueError, EncodingError):
        return False


def proof_counts(proof: PartialAuditProof) -> tuple[int, int]:
    """(signatures, path digests) carried by an inclusion proof."""
    sigs = len(proof.decision.signatures) if proof.decision else 0
    path = len(proof.inclusion.path) if proof.inclusion else 0
    return sigs, path
