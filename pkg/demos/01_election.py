"""
Choosing a leader
=================

Nodes are scored on four features, the classifier ranks them, and an
entropy-seeded draw picks the leader and its block budget from the top few.
"""
import numpy as np

from prioritychain.core import NodeProfile
from prioritychain.election import (
    BASELINE,
    FeatureVector,
    calibrate_oracle,
    mtrng_draw,
    oracle_label,
    predict_candidates,
)
from prioritychain.sim.dataset import generate_dataset, simulation_model

# the labelling rule for a 1000-node network, in exact fractions
oracle = calibrate_oracle(1000)
print("weights: trust", oracle.w_trust, "peers", oracle.w_peers, "blocks", oracle.w_blocks)
print("threshold:", oracle.theta, "=", float(oracle.theta))

# the reference node is a follower; moving one feature far enough flips it
base = FeatureVector(*BASELINE)
print("reference node:", oracle_label(oracle, base))
for peers in (979, 980):
    print(f"  peers={peers}:", oracle_label(oracle, FeatureVector(1, peers, 5, 0)))
for blocks in (14, 15):
    print(f"  blocks={blocks}:", oracle_label(oracle, FeatureVector(1, 800, blocks, 0)))
print("  vote-out flag set, everything maxed:", oracle_label(oracle, FeatureVector(10, 999, 50, 1)))

# a synthetic network; a bit over half of it is candidate material
data = generate_dataset(1000, seed=0)
print("\ncandidate share in a random network:", data.y.mean())

# rank a small network with the trained model
rng = np.random.default_rng(1)
profiles = [
    NodeProfile(node=i, trust=float(rng.uniform(0.5, 2.0)), peers=29, voteouts=int(rng.random() < 0.2))
    for i in range(30)
]
blocks = {i: int(rng.integers(0, 20)) for i in range(30)}
ranked = predict_candidates(simulation_model(30), profiles, 3, blocks)
print("top three candidates:", ranked)
for i in ranked:
    p = profiles[i]
    print(f"  node {i}: trust {p.trust:.2f}, blocks {blocks[i]}, voted out before: {p.voteouts > 0}")

# the draw is a pure function of the pool entropy, the salt and the height
out = mtrng_draw(b"mempool snapshot", 1, ranked, 10, last_height=0)
print("leader", out.leader, "may append up to", out.budget_b, "blocks")
print("same inputs, same draw:", out == mtrng_draw(b"mempool snapshot", 1, ranked, 10, last_height=0))
