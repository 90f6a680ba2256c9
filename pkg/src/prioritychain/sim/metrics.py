"""Per-run measurements and their CSV encodings.

Files written by :func:`write_metrics` (all floats with 9 significant digits):

``transactions.csv``  txid,class,arrival,first_proposed_at,included_at,height,delay
``blocks.csv``        height,leader,created_at,verdict_at,n_txs,n_priority,utilization,outcome,D
``trust.csv``         time,node,trust
``summary.csv``       key,value

Empty cells mean "never happened" (e.g. a transaction still queued at the end).
"""
from __future__ import annotations

import csv
import hashlib
import os
from dataclasses import dataclass, field

from ..core import NodeId


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


@dataclass
class TxRecord:
    txid: int
    tx_class: str
    arrival: float
    first_proposed_at: float | None = None
    included_at: float | None = None
    height: int | None = None

    @property
    def delay(self) -> float | None:
        """Arrival to creation of the block that made it onto the chain."""
        return None if self.included_at is None else self.included_at - self.arrival

    @property
    def proposal_delay(self) -> float | None:
        return None if self.first_proposed_at is None else self.first_proposed_at - self.arrival


@dataclass
class BlockRecord:
    height: int
    leader: NodeId
    created_at: float
    n_txs: int
    n_priority: int
    utilization: float
    verdict_at: float | None = None
    outcome: str = ""
    D: float | None = None


@dataclass
class MetricsRecord:
    transactions: list[TxRecord] = field(default_factory=list)
    blocks: list[BlockRecord] = field(default_factory=list)
    trust: list[tuple[float, NodeId, float]] = field(default_factory=list)
    chain_height: list[tuple[float, int]] = field(default_factory=list)
    voteouts: int = 0
    summary: dict[str, object] = field(default_factory=dict)

    def delays(self, tx_class: str) -> list[float]:
        return [t.delay for t in self.transactions if t.tx_class == tx_class and t.delay is not None]

    def utilization(self) -> list[float]:
        return [b.utilization for b in self.blocks]


TX_HEADER = ("txid", "class", "arrival", "first_proposed_at", "included_at", "height", "delay")
BLOCK_HEADER = ("height", "leader", "created_at", "verdict_at", "n_txs", "n_priority", "utilization", "outcome", "D")
TRUST_HEADER = ("time", "node", "trust")
SUMMARY_HEADER = ("key", "value")


def _write(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def write_metrics(metrics: MetricsRecord, outdir) -> list[str]:
    os.makedirs(outdir, exist_ok=True)
    paths = []
    tables = {
        "transactions.csv": (
            TX_HEADER,
            (
                (t.txid, t.tx_class, t.arrival, t.first_proposed_at, t.included_at, t.height, t.delay)
                for t in metrics.transactions
            ),
        ),
        "blocks.csv": (
            BLOCK_HEADER,
            (
                (b.height, b.leader, b.created_at, b.verdict_at, b.n_txs, b.n_priority, b.utilization, b.outcome, b.D)
                for b in metrics.blocks
            ),
        ),
        "trust.csv": (TRUST_HEADER, metrics.trust),
        "summary.csv": (SUMMARY_HEADER, sorted(metrics.summary.items())),
    }
    for name, (header, rows) in tables.items():
        path = os.path.join(outdir, name)
        _write(path, header, rows)
        paths.append(path)
    return paths


def write_rows(path, header, rows) -> str:
    _write(path, header, rows)
    return str(path)


def file_digest(paths) -> str:
    h = hashlib.sha256()
    for p in sorted(str(x) for x in paths):
        with open(p, "rb") as fh:
            h.update(os.path.basename(p).encode())
            h.update(fh.read())
    return h.hexdigest()
