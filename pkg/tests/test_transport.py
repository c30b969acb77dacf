import threading

import numpy as np
import pytest

from pqcsim.errors import DeadlockError, DomainError, ProtocolError, ResourceError
from pqcsim.layout import ExchangePlan, exchange_slots
from pqcsim.statevec import StateShard
from pqcsim.transport import (
    RankAborted,
    RankTopology,
    World,
    all_reduce_sum,
    ensure_fits,
    exchange,
    run_all_reduce,
    spawn,
)


def test_topology():
    assert RankTopology(4, 2).n_ranks == 4
    t = RankTopology.from_ranks(27, 32)
    assert t.m == 22 and t.n_ranks * 2**t.m == 2**27
    with pytest.raises(DomainError):
        RankTopology.from_ranks(4, 3)
    with pytest.raises(DomainError):
        RankTopology.from_ranks(2, 8)


def test_single_rank_runs_inline():
    world = World(1)
    out = spawn(1, lambda c: (c.rank, threading.current_thread() is threading.main_thread()), world=world)
    assert out == [(0, True)]
    assert world.stats.as_dict() == {"amplitudes_sent": [0], "messages_sent": [0]}


def test_four_ranks_own_shards():
    out = spawn(RankTopology(4, 2), lambda c: StateShard(2, c.rank).amps.shape)
    assert out == [(4,)] * 4


def test_exchange_zero_length():
    world = World(2)

    def main(c):
        return exchange(c, 1 - c.rank, np.zeros(0, dtype=complex))

    out = spawn(2, main, world=world)
    assert all(len(o) == 0 for o in out)
    assert world.stats.messages_sent == [0, 0]


def test_exchange_chunking():
    world = World(2)

    def main(c):
        buf = np.full(1024, c.rank, dtype=complex)
        return exchange(c, 1 - c.rank, buf, chunk_count=4)

    out = spawn(2, main, world=world)
    assert np.all(out[0] == 1) and np.all(out[1] == 0)
    assert world.stats.messages_sent == [4, 4]
    assert world.stats.amplitudes_sent == [1024, 1024]


def test_k1_volume_at_m22_equivalent():
    # (2^1 - 1) * 2^m / 2 per rank; checked at a smaller m with the same rule
    m = 12
    plan = ExchangePlan(m + 1, m, (0,), (m,))
    assert plan.sent_slots == 2 ** (m - 1)
    [(_, addrs, _)] = exchange_slots(plan, 0)
    assert len(addrs) == 2 ** (m - 1)


def test_mismatched_lengths_is_protocol_error():
    def main(c):
        return c.exchange(1 - c.rank, np.zeros(4 + c.rank, dtype=complex), chunk_count=1)

    with pytest.raises(ProtocolError):
        spawn(2, main, timeout=5)


def test_missing_partner_times_out():
    def main(c):
        if c.rank == 0:
            c.sendrecv(1, np.zeros(2, dtype=complex))
        return None

    with pytest.raises(DeadlockError):
        spawn(2, main, timeout=0.5)


def test_failure_aborts_other_ranks():
    def main(c):
        if c.rank == 1:
            raise ValueError("boom")
        c.barrier()

    with pytest.raises(ValueError, match="boom"):
        spawn(4, main, timeout=5)


def test_all_reduce_examples():
    assert run_all_reduce([2.5]) == [2.5]
    assert run_all_reduce([0.25] * 4) == [1.0] * 4
    assert run_all_reduce([0.25, 0.25]) == [0.5, 0.5]


def test_all_reduce_fixed_order():
    # values whose floating sum depends on order
    vals = [1e16, 1.0, -1e16, 1.0, 3.0, 1e-3, -3.0, 7.0]
    want = 0.0
    for v in vals:
        want += v
    for _ in range(5):
        assert run_all_reduce(vals) == [want] * len(vals)


def test_all_reduce_arrays_and_module_function():
    out = spawn(4, lambda c: all_reduce_sum(c, np.array([c.rank, 1.0])))
    for o in out:
        assert np.array_equal(o, [6.0, 4.0])


def test_all_gather():
    out = spawn(4, lambda c: c.all_gather(c.rank * 10))
    assert out == [[0, 10, 20, 30]] * 4


def test_ensure_fits(monkeypatch):
    monkeypatch.setenv("PQCSIM_MAX_STATE_BYTES", str(2**20))
    ensure_fits(16)
    with pytest.raises(ResourceError):
        ensure_fits(17)


def test_rank_aborted_category():
    assert RankAborted.category == "aborted"


def test_swap_volume_and_messages():
    for chunks in (1, 3, 4):
        l, m = 8, 5
        plan = ExchangePlan(l, m, (0, 2), (5, 7), chunks)
        world = World(1 << (l - m))

        def main(c):
            amps = np.zeros(1 << m, dtype=complex)
            for partner, addrs, _ in exchange_slots(plan, c.rank):
                c.exchange_inplace(partner, amps, addrs, chunks)

        spawn(world.n_ranks, main, world=world)
        assert world.stats.amplitudes_sent == [3 * 2 ** (m - 2)] * world.n_ranks
        assert world.stats.messages_sent == [3 * min(chunks, 2 ** (m - 2))] * world.n_ranks
