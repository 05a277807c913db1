import hashlib

from shardledger.chain import EMPTY_ROOT, ZERO_DIGEST, chain_head
from shardledger.contracts import cscoin, manage_contracts, manage_shards, smet, svote
from shardledger.crypto.hashing import hash_digest
from shardledger.crypto.merkle import merkle_root
from shardledger.crypto.signatures import keygen
from shardledger.model import genesis_object, trace_id

ROOT_ABC = "8ce4650a7da337e97d24ab5dda52689167e8c15220ecd2c5ecbdeaafc9630691"


def _sha(*parts: bytes) -> bytes:
    return hashlib.sha256(b"".join(parts)).digest()


def test_hash_vector_against_hashlib():
    want = _sha(b"\x03tag", b"payload")
    assert hash_digest("tag", b"payload") == want
    assert want.hex() == "58e81e152c3266ccd6672f5029d264346c671ec643163fd68bb4c475f41e97e6"
    assert EMPTY_ROOT == _sha(b"\x05empty")


def test_merkle_and_head_vectors_by_hand():
    leaf = [_sha(b"\x04leaf", x) for x in (b"a", b"b", b"c")]
    node = lambda a, b: _sha(b"\x04node", a, b)  # noqa: E731
    root = node(node(leaf[0], leaf[1]), node(leaf[2], leaf[2]))
    assert merkle_root([b"a", b"b", b"c"]) == root and root.hex() == ROOT_ABC
    head = chain_head(root, 0, ZERO_DIGEST)
    assert head == _sha(b"\x05chain", root, bytes(8), bytes(32))
    assert head.hex() == "d841cfc91751dfc576f8f505fefc06917f8534a3870eed5ce805d8a8c4e69f0a"


def test_contract_ids():
    ids = {m.SPEC.name: m.SPEC.id.hex() for m in (cscoin, smet, svote, manage_shards, manage_contracts)}
    assert ids == {
        "CSCoin": "267e91e0321b1947706ccbfd0541ba97f50daaa2b60ff8f5d40444c6474caf43",
        "SMet": "d5746c691113f88a489c97c7a254defb3118633e95dfc0ff78e0d7423655bca1",
        "SVote": "ff837979b9ab9e1a3b25bce6f155a6f23f4422242a72695acb9d11b35b901f74",
        "ManageShards": "625a87a981c76f807dc08e97db72ccbf2164a0323dd21b834522f598fcaaa022",
        "ManageContracts": "5dc45efab6d0b59e6062deb26282ce17515d6d2ae8d8d8cf9f05db1a31e6047e",
    }
    assert cscoin.SPEC.id == _sha(b"\x08contract", b"CSCoin")


def test_contract_vectors():
    a, b = keygen(b"alice"), keygen(b"bob")
    assert a.verify_key.hex() == "cca782c155e9177744c9ce56e4755a8edf1d440ecb197169839cff7c5cee43a0"
    acc = genesis_object(b"doc", 0, cscoin.ACCOUNT, cscoin.account_payload(a.verify_key, 10))
    assert acc.payload.hex() == (
        "04000000020100000020cca782c155e9177744c9ce56e4755a8edf1d440ecb197169839cff7c5cee43a0"
        "0300000008000000000000000a"
    )
    assert acc.id.hex() == "dbf175d601337e369e771cf508520dc7dff329a735afb752638099ab7514fa04"
    assert smet.meter_payload(a.verify_key).hex() == (
        "04000000030100000020cca782c155e9177744c9ce56e4755a8edf1d440ecb197169839cff7c5cee43a0"
        "04000000000400000000"
    )
    tok = genesis_object(b"doc", 1, manage_contracts.TOKEN, b"")
    assert manage_contracts.create(tok, "CSCoin").lparams.hex() == (
        "040000000202000000064353436f696e0200000004696e6974"
    )
    t = cscoin.transfer([acc], [-3], [(b.verify_key, 3)], keys={a.verify_key: a})
    assert t.lreturns.hex() == (
        "04000000040200000005666c6f7773040000000104000000020100000020"
        "dbf175d601337e369e771cf508520dc7dff329a735afb752638099ab7514fa04"
        "0300000008fffffffffffffffd0400000001040000000201000000200"
        "8adaef0175a163c9bb39a34f2bfd880a6958c223c28f6dcecc1fc685f4aa041"
        "030000000800000000000000030400000000"
    )
    assert trace_id(t).hex() == "055823bf65e8969529ec059aad5dfa5c092708526c67ab76740187b5f773856a"
    assert cscoin.CHECKER.run(t, (acc,), ())
