import random

import pytest

from shardledger.orderer import SILENT, Orderer, OrdererConfig, message_digest


def _orderer(**kw):
    return Orderer(0, OrdererConfig(kw.pop("n", 4), kw.pop("f", 1), **kw))


def test_latency():
    o = _orderer(latency=3)
    o.submit(5, b"a")
    assert o.step(7) == []
    out = o.step(8)
    assert [e.message for e in out] == [b"a"] and out[0].round == 8


def test_duplicates_absorbed():
    o = _orderer()
    d1 = o.submit(0, b"x")
    d2 = o.submit(1, b"x")
    assert d1 == d2 == message_digest(b"x")
    assert [e.message for e in o.step(10)] == [b"x"]
    o.submit(11, b"x")
    assert o.step(20) == [] and o.absorbed == 2


def test_order_by_round_then_digest():
    o = _orderer(latency=1)
    rng = random.Random(3)
    by_round: dict[int, list[bytes]] = {}
    for i in range(20):
        r, m = rng.randrange(3), bytes([i])
        by_round.setdefault(r, []).append(m)
        o.submit(r, m)
    log = o.step(10)
    assert [e.seq_no for e in log] == list(range(20))
    expected = [m for r in sorted(by_round) for m in sorted(by_round[r], key=message_digest)]
    assert [e.message for e in log] == expected


def test_capacity():
    o = _orderer(latency=1, capacity=3)
    for i in range(7):
        o.submit(0, bytes([i + 1]))
    assert [len(o.step(r)) for r in range(1, 5)] == [3, 3, 1, 0]
    assert [e.seq_no for e in o.log] == list(range(7))


def test_same_input_same_log():
    def run():
        o = _orderer(latency=2)
        rng = random.Random(8)
        for r in range(30):
            for _ in range(rng.randrange(3)):
                o.submit(r, rng.randbytes(4))
            o.step(r)
        return [(e.seq_no, e.digest, e.round) for e in o.log]

    assert run() == run()


def test_silent_nodes_do_not_stall_ordering():
    o = _orderer(n=4, f=1, behaviors=(SILENT, "Honest", "Honest", "Honest"))
    o.submit(0, b"m")
    assert len(o.step(2)) == 1


def test_pending_keys():
    o = Orderer(0, OrdererConfig(4, 1), key=lambda m: m[:1])
    o.submit(0, b"ka")
    o.submit(0, b"kb")
    assert o.has_pending(b"k") and o.pending_count == 2
    o.step(5)
    assert not o.has_pending(b"k") and o.pending_count == 0


@pytest.mark.parametrize("kw", [
    {"n": 3, "f": 1},
    {"n": 6, "f": 2},
    {"latency": 0},
    {"capacity": 0},
    {"behaviors": ("Honest",)},
    {"behaviors": ("Honest", "Honest", "Honest", "Sleepy")},
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        OrdererConfig(kw.pop("n", 4), kw.pop("f", 1), **kw)


def test_empty_message_refused():
    with pytest.raises(ValueError):
        _orderer().submit(0, b"")
