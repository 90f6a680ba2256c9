"""
Reviewing a block
=================

Followers review each proposed block, predict how a random peer will judge
it, and are scored with the quadratic rule. Trust follows the scores.
"""
import numpy as np

from prioritychain.core import NodeProfile, Transaction, TxClass, make_block
from prioritychain.peer_prediction import (
    WorldPrior,
    posterior_belief,
    prior_belief,
    quadratic_score,
    review_round,
    update_trust,
)

i, j = NodeProfile(node=0), NodeProfile(node=1)
world = WorldPrior(0.8)
print("prior that the peer accepts:", prior_belief(i, j, world))
print("after seeing a good block:   ", round(posterior_belief(i, j, world, "a"), 4))
print("after seeing a bad block:    ", round(posterior_belief(i, j, world, "r"), 4))

# the rule rewards honest probabilities: expected score peaks at the truth
ys = np.linspace(0, 1, 101)
q = 0.7
expected = [q * quadratic_score(y, 1) + (1 - q) * quadratic_score(y, 0) for y in ys]
print("\nbest report when the peer accepts with 0.7:", ys[int(np.argmax(expected))])

# trust = history blend of scores plus a promptness bonus
trust, core = update_trust(0.6, 0.75, alpha=0.5, beta=0.2)
print("trust after one good, prompt review:", trust)

# ten rounds with one reviewer that always reports the opposite
block = make_block([Transaction(0, TxClass.NORMAL, 0.1, 0.0)], leader=99, height=1, now=0.0)
followers = [NodeProfile(node=k, p_fa=0.02, p_md=0.02) for k in range(12)]
rng = np.random.default_rng(5)
for k in range(10):
    quality = "a" if rng.random() < 0.8 else "r"
    rr = review_round(block, followers, world, quality, rng, flip_prob={11: 1.0})
    followers = rr.profiles
    print(f"round {k}: verdict {rr.verdict.outcome.value:<13} D={rr.verdict.D:.2f}"
          f"  honest node 0 trust {followers[0].trust:.3f}  liar trust {followers[11].trust:.3f}")
