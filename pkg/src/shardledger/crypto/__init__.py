from . import proofs
from .elgamal import (
    ElGamalCiphertext,
    Opening,
    PedersenCommitment,
    PlaintextOutOfRange,
    elgamal_add,
    elgamal_decrypt,
    elgamal_encrypt,
    elgamal_keygen,
    pedersen_commit,
)
from .group import GroupContext, default_group
from .hashing import DIGEST_SIZE, HASH_NAME, ZERO_DIGEST, Digest, hash_digest
from .merkle import EmptyTree, MerkleProof, merkle_prove, merkle_root, merkle_verify
from .signatures import SIGNATURE_SCHEME, KeyPair, keygen, sign, verify

__all__ = [
    "DIGEST_SIZE", "HASH_NAME", "ZERO_DIGEST", "Digest", "hash_digest",
    "SIGNATURE_SCHEME", "KeyPair", "keygen", "sign", "verify",
    "EmptyTree", "MerkleProof", "merkle_prove", "merkle_root", "merkle_verify",
    "GroupContext", "default_group",
    "ElGamalCiphertext", "Opening", "PedersenCommitment", "PlaintextOutOfRange",
    "elgamal_add", "elgamal_decrypt", "elgamal_encrypt", "elgamal_keygen", "pedersen_commit",
    "proofs",
]
