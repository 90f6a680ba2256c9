"""Unconfirmed transaction pool with priority-first draining."""
from __future__ import annotations

import heapq
import struct
from collections import deque
from typing import Iterable

from .core import Transaction, TxClass
from .errors import ContractViolation, DuplicateTransaction, EmptyPoolError

HISTORY_CAPACITY = 64
_SAMPLE = struct.Struct("<qq")


class Mempool:
    """Two FIFO queues (priority and normal) keyed by ``(arrival_time, txid)``.

    Every txid ever submitted is remembered so a replayed transaction is
    rejected even after it has left the pool. Transactions returned from a
    rejected block go back through :meth:`requeue`, which keeps their
    original arrival time.
    """

    def __init__(self):
        self._priority: list[tuple[float, int, Transaction]] = []
        self._normal: list[tuple[float, int, Transaction]] = []
        self._queued: set[int] = set()
        self._seen: set[int] = set()
        self.size_history: deque[tuple[float, int]] = deque(maxlen=HISTORY_CAPACITY)

    def __len__(self) -> int:
        return len(self._priority) + len(self._normal)

    def __contains__(self, txid: int) -> bool:
        return txid in self._queued

    def _queue_for(self, tx: Transaction):
        return self._priority if tx.tx_class is TxClass.PRIORITY else self._normal

    def _push(self, tx: Transaction) -> None:
        heapq.heappush(self._queue_for(tx), (tx.arrival_time, tx.txid, tx))
        self._queued.add(tx.txid)

    def _record(self, now: float) -> None:
        self.size_history.append((now, len(self)))

    def submit(self, tx: Transaction, now: float) -> None:
        if tx.txid in self._seen:
            raise DuplicateTransaction(f"txid {tx.txid} already submitted")
        if tx.arrival_time != now:
            raise ContractViolation(
                f"tx {tx.txid} arrival_time {tx.arrival_time} differs from submission time {now}"
            )
        self._seen.add(tx.txid)
        self._push(tx)
        self._record(now)

    def requeue(self, txs: Iterable[Transaction], now: float) -> None:
        """Return drained transactions (e.g. from a rejected block) to the pool."""
        for tx in txs:
            if tx.txid not in self._seen:
                raise ContractViolation(f"txid {tx.txid} was never submitted")
            if tx.txid in self._queued:
                raise DuplicateTransaction(f"txid {tx.txid} is already queued")
            self._push(tx)
        self._record(now)

    def counts(self) -> tuple[int, int]:
        """``(p, n_t)``: queued priority and normal transaction counts."""
        return len(self._priority), len(self._normal)

    def drain_for_block(self, m: int, now: float | None = None) -> list[Transaction]:
        """Remove and return up to ``m`` transactions, all priority ones first.

        If more than ``m`` priority transactions wait, the ``m`` oldest are
        taken and the rest stay queued.
        """
        if m < 1:
            raise ContractViolation(f"block capacity must be positive, got {m}")
        if not len(self):
            raise EmptyPoolError("cannot drain an empty mempool")
        out = []
        for queue in (self._priority, self._normal):
            while queue and len(out) < m:
                _, txid, tx = heapq.heappop(queue)
                self._queued.discard(txid)
                out.append(tx)
        if now is not None:
            self._record(now)
        return out

    def oldest_normal_arrival(self) -> float | None:
        return self._normal[0][0] if self._normal else None

    def current_wait(self, now: float) -> float:
        """``T_C``: how long the oldest waiting normal transaction has waited."""
        oldest = self.oldest_normal_arrival()
        return 0.0 if oldest is None else now - oldest

    def entropy_sample(self) -> bytes:
        """Deterministic byte encoding of the recent pool-size history.

        Times are quantized to milliseconds; each sample packs as two
        little-endian int64 values.
        """
        return b"".join(
            _SAMPLE.pack(round(t * 1000), size) for t, size in self.size_history
        )

    def pending(self) -> list[Transaction]:
        """All queued transactions in drain order (priority first)."""
        return [e[2] for e in sorted(self._priority)] + [e[2] for e in sorted(self._normal)]
