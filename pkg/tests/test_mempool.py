import itertools

import pytest
from hypothesis import given, strategies as st

from prioritychain.core import Transaction, TxClass, make_block, validate_block
from prioritychain.errors import DuplicateTransaction, EmptyPoolError
from prioritychain.mempool import HISTORY_CAPACITY, Mempool


def tx(txid, cls, t):
    return Transaction(txid, TxClass(cls), 0.1, t)


def filled(*specs):
    pool = Mempool()
    for txid, (cls, t) in enumerate(specs):
        pool.submit(tx(txid, cls, t), t)
    return pool


def test_submit_priority():
    pool = filled(("P", 0.0))
    assert pool.counts() == (1, 0)


def test_submit_normal_then_priority():
    pool = filled(("N", 0.0), ("P", 1.0))
    assert pool.counts() == (1, 1)
    assert [t.tx_class for t in pool.pending()] == [TxClass.PRIORITY, TxClass.NORMAL]


def test_duplicate_txid_rejected():
    pool = Mempool()
    pool.submit(tx(1, "N", 0.0), 0.0)
    with pytest.raises(DuplicateTransaction):
        pool.submit(tx(1, "N", 1.0), 1.0)


def test_replayed_tx_rejected_after_drain():
    pool = Mempool()
    pool.submit(tx(1, "N", 0.0), 0.0)
    pool.drain_for_block(5)
    with pytest.raises(DuplicateTransaction):
        pool.submit(tx(1, "N", 2.0), 2.0)


def test_counts():
    assert Mempool().counts() == (0, 0)
    assert filled(("N", 0), ("N", 1), ("N", 2)).counts() == (0, 3)
    assert filled(("P", 0), ("P", 1), ("N", 2)).counts() == (2, 1)


def test_drain_priority_first():
    pool = filled(("P", 0.0), ("P", 1.0), ("N", 0.5), ("N", 1.5), ("N", 2.5))
    out = pool.drain_for_block(4)
    assert [t.txid for t in out] == [0, 1, 2, 3]
    assert [t.txid for t in pool.pending()] == [4]


def test_drain_takes_everything_that_fits():
    pool = filled(("N", 0.0), ("N", 1.0))
    assert [t.txid for t in pool.drain_for_block(4)] == [0, 1]
    assert len(pool) == 0


def test_priority_overflow_keeps_oldest():
    pool = filled(*[("P", float(i)) for i in range(5)])
    assert [t.txid for t in pool.drain_for_block(3)] == [0, 1, 2]
    assert [t.txid for t in pool.pending()] == [3, 4]


def test_drain_empty_pool_errors():
    with pytest.raises(EmptyPoolError):
        Mempool().drain_for_block(3)


def test_arrival_ties_break_by_txid():
    pool = Mempool()
    for txid in (5, 2, 9):
        pool.submit(tx(txid, "N", 1.0), 1.0)
    assert [t.txid for t in pool.drain_for_block(3)] == [2, 5, 9]


def test_current_wait():
    assert Mempool().current_wait(10.0) == 0
    pool = filled(("N", 4.0))
    assert pool.current_wait(10.0) == 6.0
    pool.drain_for_block(5)
    assert pool.current_wait(12.0) == 0


def test_requeue_keeps_arrival_order():
    pool = filled(("N", 0.0), ("N", 1.0), ("N", 2.0))
    first = pool.drain_for_block(2)
    pool.requeue(first, 3.0)
    assert [t.txid for t in pool.pending()] == [0, 1, 2]
    assert pool.current_wait(3.0) == 3.0


def test_entropy_sample():
    assert Mempool().entropy_sample() == b""
    a = filled(("N", 0.0), ("P", 1.0))
    b = filled(("N", 0.0), ("P", 1.0))
    c = filled(("N", 0.0), ("P", 1.5))
    assert a.entropy_sample() == b.entropy_sample()
    assert a.entropy_sample() != c.entropy_sample()
    assert len(a.entropy_sample()) == 32


def test_history_is_bounded():
    pool = filled(*[("N", float(i)) for i in range(HISTORY_CAPACITY + 10)])
    assert len(pool.size_history) == HISTORY_CAPACITY


ops = st.lists(
    st.one_of(
        st.tuples(st.just("submit"), st.sampled_from("PN")),
        st.tuples(st.just("drain"), st.integers(1, 6)),
    ),
    max_size=60,
)


@given(ops)
def test_conservation_and_block_validity(script):
    pool = Mempool()
    ids = itertools.count()
    now = 0.0
    submitted = {"P": 0, "N": 0}
    drained = {"P": 0, "N": 0}
    for op, arg in script:
        now += 0.5
        if op == "submit":
            pool.submit(tx(next(ids), arg, now), now)
            submitted[arg] += 1
        elif len(pool):
            out = pool.drain_for_block(arg, now)
            assert 1 <= len(out) <= arg
            block = make_block(out, leader=0, height=1, now=now)
            assert validate_block(block, arg) == []
            for t in out:
                drained[t.tx_class.value] += 1
    p, n = pool.counts()
    assert submitted["P"] == drained["P"] + p
    assert submitted["N"] == drained["N"] + n
