"""Run a small private election through the SVote checker and print each step."""

from shardledger.contracts import svote
from shardledger.crypto.elgamal import elgamal_keygen
from shardledger.crypto.signatures import keygen
from shardledger.model import genesis_object


def checked(trace, inputs) -> bool:
    return svote.CHECKER.run(trace, tuple(inputs), ())


def main() -> None:
    dk, ek = elgamal_keygen(b"demo tally")
    authority = keygen(b"authority")
    voters = [keygen(b"voter%d" % i) for i in range(5)]
    token = genesis_object(b"demo", 0, svote.TOKEN, b"")

    t = svote.create_election(token, ("yes", "no", "abstain"), [v.verify_key for v in voters], ek, authority)
    print("createElection accepted:", checked(t, [token]))
    vote = t.outputs[1]

    for v, choice in zip(voters, (0, 1, 0, 2, 0)):
        t = svote.add_vote(vote, choice, v)
        print(f"ballot from {v.verify_key.hex()[:8]} accepted:", checked(t, [vote]))
        vote = t.outputs[0]

    replay = svote.add_vote(vote, 1, voters[0], seed=b"again")
    print("second ballot from the same voter accepted:", checked(replay, [vote]))

    t = svote.tally(vote, dk, authority)
    print("tally accepted:", checked(t, [vote]))
    options, counts = svote.read_tally(t.outputs[0])
    for option, n in zip(options, counts):
        print(f"  {option}: {n}")


if __name__ == "__main__":
    main()
