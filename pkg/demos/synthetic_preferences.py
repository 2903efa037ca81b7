"""
Off-policy DFA with preferences synthesized from a critic
=========================================================

Transitions go into a replay buffer.  For each sampled (s, a) the action of
the nearest stored state is retrieved, and the action with the higher critic
value is labelled preferred.  The policy is trained on those labels only.
Tabular SAC, which sets the actor to softmax(Q / lam) directly, runs
alongside for comparison.
"""

import numpy as np

from dfa_lab.dfa import DfaConfig
from dfa_lab.mdp import GridWorldSpec, build_gridworld, grid_embedding
from dfa_lab.harness.evaluation import evaluate_policy
from dfa_lab.replay import CriticConfig, dfa_train_offpolicy, sac_tabular_train

mdp = build_gridworld(GridWorldSpec())
cc = CriticConfig(entropy_coeff=0.1, learning_rate=0.1, gamma=0.9, batch_size=64)
kw = dict(episodes=1000, eval_interval=5000, eval_episodes=200)

dfa_pol, dfa_rec, critic = dfa_train_offpolicy(mdp, DfaConfig(alpha=1e-3), cc,
                                               np.random.default_rng(0),
                                               state_embedding=grid_embedding(5), **kw)
sac_pol, sac_rec, _ = sac_tabular_train(mdp, cc, np.random.default_rng(0), **kw)
for (steps, a), (_, b) in zip(dfa_rec.points, sac_rec.points):
    print(f"{steps:>6d} steps   DFA {a: .3f}   SAC {b: .3f}")

print("final DFA return:", round(evaluate_policy(mdp, dfa_pol, 2000, 9), 3))
print("final SAC return:", round(evaluate_policy(mdp, sac_pol, 2000, 9), 3))
