"""Training the two-objective agent and trading spread against seed reliability.

The agent keeps one Q network per objective: marginal spread and the seed's own
activation probability.  At selection time the two are combined as w1*Q1 + w2*Q2,
so moving weight onto w2 should pick seeds that are more likely to fire.  The
result is compared with the modified greedy baseline on a graph family the agent
never saw during training.  Expect the agent to trail MGHC on spread (see the README);
its advantage is that inference is a handful of forward passes.

    python3 demos/03_agent.py      # about two minutes, mostly training
"""
import time

import numpy as np

from aimkit import (AgentConfig, SeedMode, assign_activation_params, expected_spread, generate, infer_seed_set,
                    influence_capacity, label_candidates, mghc, train_agent)


def with_candidates(family, n, seed):
    g = assign_activation_params(generate(family, n, seed), rng_seed=seed + 1000)
    return g, np.flatnonzero(label_candidates(influence_capacity(g), 0.2))


pool = [with_candidates(f, n, s) for s, (f, n) in enumerate((f, n) for f in ("ba", "plc") for n in (200, 300))]
cfg = AgentConfig(budget=10, episodes=400)
t0 = time.perf_counter()
params, log = train_agent(pool, cfg, rng_seed=0)
print(f"trained {len(log)} episodes in {time.perf_counter() - t0:.0f}s; final epsilon {log[-1]['epsilon']:.3f}")

g, cand = with_candidates("sbm", 400, 900)
for w2 in (0.0, 0.5, 1.0):
    seeds = infer_seed_set(g, cand, params, 10, w1=1 - w2, w2=w2)
    spread = expected_spread(g, seeds, SeedMode.INTRINSIC, 1000, 1).normalized
    print(f"w2={w2:.1f}: spread {spread:.3f}, mean seed p_s {g.intrinsic_prob[seeds].mean():.3f}")

t0 = time.perf_counter()
seeds = mghc(g, 10, None, M=200, rng_seed=0)
print(f"MGHC: spread {expected_spread(g, seeds, SeedMode.INTRINSIC, 1000, 1).normalized:.3f}, "
      f"mean seed p_s {g.intrinsic_prob[seeds].mean():.3f} ({time.perf_counter() - t0:.1f}s)")
