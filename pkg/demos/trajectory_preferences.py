"""
On-policy DFA from majority-vote trajectory comparisons
=======================================================

Each iteration rolls out two episodes, a panel of 500 Bradley-Terry
annotators votes on which return is higher, and the policy takes one Adam
step on the trajectory preference loss.  No reward model is fitted.
"""

import numpy as np

from dfa_lab.dfa import DfaConfig, dfa_train_onpolicy
from dfa_lab.mdp import GridWorldSpec, build_gridworld
from dfa_lab.preference import AnnotatorPanel

mdp = build_gridworld(GridWorldSpec())
cfg = DfaConfig(alpha=1e-3, learning_rate=3e-2, iterations=25_000)
panel = AnnotatorPanel(500, beta=1.0, rng=np.random.default_rng(1))
policy, record = dfa_train_onpolicy(mdp, panel, cfg, np.random.default_rng(0),
                                    eval_interval=100_000)
for steps, value in record.points:
    print(f"{steps:>9d} env steps   average return {value: .3f}")

arrows = np.array(list("^v<>"))[policy.greedy_actions()].reshape(5, 5)
print("\n".join(" ".join(row) for row in arrows))
