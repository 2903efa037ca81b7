"""
Reward-model RLHF baseline
==========================

Label trajectory pairs from the uniform policy, fit a tabular reward by
Bradley-Terry maximum likelihood, then run KL-penalized PPO on the learned
reward.  Evaluation always uses the true reward.
"""

import numpy as np

from dfa_lab.baselines import (PpoConfig, collect_preference_pairs, fit_reward_model,
                               ppo_train)
from dfa_lab.mdp import GridWorldSpec, build_gridworld
from dfa_lab.preference import AnnotatorPanel

mdp = build_gridworld(GridWorldSpec())
rng = np.random.default_rng(0)
pairs = collect_preference_pairs(mdp, AnnotatorPanel(500, 1.0, np.random.default_rng(1)),
                                 2000, rng)
model, losses = fit_reward_model(pairs, mdp.n_states, mdp.n_actions, epochs=1000)
print(f"reward-model loss {losses[0]:.4f} -> {losses[-1]:.4f}")

# Only return differences are observed, so the fit is compared by correlation
corr = np.corrcoef(model.r_hat.ravel(), mdp.reward.ravel())[0, 1]
print(f"correlation of learned and true r(s, a): {corr:.3f}")

cfg = PpoConfig(iterations=1000, rollouts_per_iter=10)
for name, source in (("RM+PPO", model), ("Oracle-PPO", "true")):
    _, rec = ppo_train(mdp, source, cfg, np.random.default_rng(2), eval_interval=50_000,
                       algorithm=name)
    print(name, [round(v, 2) for v in rec.returns])
