"""
Building blocks
===============

Priority transactions go out in the next block at once; normal ones wait
until the block is full or the oldest has waited w seconds.
"""
from prioritychain.builder import BuilderConfig, build, evaluate
from prioritychain.core import Transaction, TxClass
from prioritychain.mempool import Mempool

cfg = BuilderConfig(m=4, w=5.0)
pool = Mempool()
for txid, t in enumerate([0.0, 1.0, 2.0]):
    pool.submit(Transaction(txid, TxClass.NORMAL, 0.2, t), t)

print("three normal txs, t=3:", evaluate(pool, 3.0, cfg).value)
print("oldest has waited 5 s:", evaluate(pool, 5.0, cfg).value)

pool.submit(Transaction(3, TxClass.PRIORITY, 0.0, 3.5), 3.5)
print("a priority tx arrives:", evaluate(pool, 3.5, cfg).value)

block = build(pool, leader=7, height=1, now=3.5, cfg=cfg)
print("block 1:", [(t.txid, t.tx_class.value) for t in block.txs], "left in pool:", len(pool))
