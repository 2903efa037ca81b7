"""
Stochastic GridWorld: construction, rollouts and exact returns
==============================================================
"""

import numpy as np

from dfa_lab.mdp import GridWorldSpec, build_gridworld, cell_coords, rollout, batch_returns
from dfa_lab.policy import LogitPolicy

# A 5x5 grid with a random reward on roughly half the cells.  Every move is
# reversed with probability 0.4, and moves into the wall leave the agent in place.
mdp = build_gridworld(GridWorldSpec(side=5, reverse_prob=0.4, horizon=20, rng_seed=0))
print("cell rewards:")
print(np.round(mdp.destination_reward.reshape(5, 5), 2))

# One episode under the uniform policy
traj = rollout(mdp, LogitPolicy.uniform(25, 4), np.random.default_rng(0))
print("path:", [cell_coords(s, 5) for s in traj.states[:6]], "...")
print("realized return:", round(traj.rewards.sum(), 3))

# Monte-Carlo return of the uniform policy against the exact occupancy recursion
probs = np.full((25, 4), 0.25)
g = batch_returns(mdp, probs, np.random.default_rng(1), 20_000)
d, exact = mdp.initial_dist.copy(), 0.0
for _ in range(mdp.horizon):
    exact += np.sum(d[:, None] * probs * mdp.reward)
    d = np.einsum("s,sa,sap->p", d, probs, mdp.transition)
print(f"uniform policy: MC {g.mean():.3f} +- {g.std(ddof=1) / np.sqrt(g.size):.3f}, "
      f"exact {exact:.3f}")

# Best achievable expected return (time-dependent optimal policy)
v = np.zeros(25)
for _ in range(mdp.horizon):
    v = np.max(mdp.reward + mdp.transition @ v, axis=1)
print(f"optimal expected return from the centre: {v[12]:.3f}")
