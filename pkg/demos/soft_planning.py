"""
Soft value iteration, Gibbs policies and Bradley-Terry labels
=============================================================
"""

import numpy as np

from dfa_lab.mdp import random_mdp
from dfa_lab.preference import exact_pref_matrix
from dfa_lab.soft import (bt_state_prob, gibbs_policy, soft_v, soft_value_iteration,
                          value_iteration)

mdp = random_mdp(np.random.default_rng(0), 4, 3, gamma=0.9)

# The soft-optimal values for a few entropy weights; as lam shrinks they
# approach the ordinary optimal values.
print("hard V:", np.round(value_iteration(mdp), 3))
for lam in (1.0, 0.1, 1e-4):
    vals = soft_value_iteration(mdp, lam)
    assert np.allclose(soft_v(vals.q, lam), vals.v)
    print(f"lam={lam:g} V:", np.round(vals.v, 3))

# The Gibbs policy softmax(Q / lam) is the entropy-regularized optimum
vals = soft_value_iteration(mdp, 0.5)
print("Gibbs policy at state 0:", np.round(gibbs_policy(vals, 1 / 0.5).probs()[0], 3))

# Annotators compare actions through sigma(beta * (Q(s,a) - Q(s,b)))
print("P(action 0 beats 1 | s=0):", round(bt_state_prob(vals, 0, 0, 1, beta=1.0), 4))
print("full preference matrix at s=0:")
print(np.round(exact_pref_matrix(vals, 0, beta=1.0), 3))
