"""
Attacks
=======

An empty-block leader is voted out by its first block. A colluding group
of reviewers, on the other hand, does move verdicts.
"""
from prioritychain.engine import EventKind
from prioritychain.sim.experiments import collusion_flip_rate, run_attack

res = run_attack("empty-block", seed=0)
for ev in res.trace[:6]:
    keys = {k: v for k, v in ev.payload if k in ("leader", "height", "D", "outcome")}
    if ev.kind is EventKind.BLOCK_PROPOSED:
        keys["n_txs"] = 0 if ev.get("txs") == "-" else len(ev.get("txs").split("|"))
    print(f"{ev.time:8.3f}  {ev.kind.value:<16} {keys}")
accepted = sum(1 for e in res.trace if e.kind is EventKind.BLOCK_ACCEPTED and e.get("leader") == "0")
print("blocks accepted from the attacker:", accepted)
print("attacker's reward:", res.incentives.leader_rewards.get(0, 0.0))
print("chain height after", res.config.duration, "s:", res.metrics.summary["chain_height"])

lazy = run_attack("laggard", seed=0)
print("\nlazy leader run, vote-outs:", lazy.metrics.summary["voteouts"],
      "accepted:", lazy.metrics.summary["blocks_accepted"])

print("\nshare of verdicts a colluding group changes (10 reviewers):")
for k in range(1, 5):
    print(f"  {k} colluders: {collusion_flip_rate(10, k, seeds=range(10)).flip_rate:.3f}")
