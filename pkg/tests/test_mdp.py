import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfa_lab.mdp import (GridWorldSpec, TabularMdp, Trajectory, batch_returns, build_gridworld,
                         cell_index, grid_embedding, random_mdp, rollout, rollouts,
                         trajectory_return)
from dfa_lab.policy import LogitPolicy

from conftest import occupancy_return


def test_default_gridworld_shape_and_start():
    mdp = build_gridworld(GridWorldSpec(side=5, horizon=20, reverse_prob=0.4))
    assert (mdp.n_states, mdp.n_actions) == (25, 4)
    assert mdp.horizon == 20 and mdp.gamma == 1.0
    expected = np.zeros(25)
    expected[cell_index(2, 2, 5)] = 1.0
    np.testing.assert_array_equal(mdp.initial_dist, expected)


def test_no_reversal_moves_up_deterministically():
    mdp = build_gridworld(GridWorldSpec(reverse_prob=0.0))
    s = cell_index(2, 2, 5)
    row = mdp.transition[s, 0]
    assert row[cell_index(1, 2, 5)] == 1.0 and row.sum() == 1.0


def test_corner_blocked_move_splits_between_stay_and_reversal():
    mdp = build_gridworld(GridWorldSpec(side=2, reverse_prob=0.4))
    s = cell_index(0, 0, 2)
    up = mdp.transition[s, 0]  # intended move is off-grid, reversal goes down
    assert up[s] == pytest.approx(0.6) and up[cell_index(1, 0, 2)] == pytest.approx(0.4)


def test_full_reversal_into_wall_stays_put():
    mdp = build_gridworld(GridWorldSpec(side=2, reverse_prob=1.0))
    s = cell_index(0, 0, 2)
    assert mdp.transition[s, 1, s] == 1.0  # "down" always reversed to "up", off-grid


def test_expected_reward_is_destination_average():
    mdp = build_gridworld(GridWorldSpec(rng_seed=7))
    np.testing.assert_allclose(mdp.reward, mdp.transition @ mdp.destination_reward, atol=1e-15)
    cells = mdp.destination_reward
    assert np.all((cells == 0) | np.isfinite(cells))


@pytest.mark.parametrize("bad", [dict(side=1), dict(reverse_prob=1.5),
                                 dict(reward_coin_prob=-0.1), dict(horizon=0)])
def test_invalid_spec_rejected(bad):
    with pytest.raises(ValueError):
        GridWorldSpec(**bad)


def test_tabular_mdp_validation():
    P = np.full((2, 1, 2), 0.5)
    r = np.zeros((2, 1))
    TabularMdp(P, r, 0.9, 3, np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        TabularMdp(P * 1.1, r, 0.9, 3, np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        TabularMdp(P, r, 0.9, 3, np.array([0.7, 0.5]))
    with pytest.raises(ValueError):
        TabularMdp(P, r + np.inf, 0.9, 3, np.array([0.5, 0.5]))


@settings(max_examples=30, deadline=None)
@given(side=st.integers(2, 7), reverse=st.floats(0, 1), coin=st.floats(0, 1),
       seed=st.integers(0, 2**32 - 1))
def test_gridworld_rows_are_distributions(side, reverse, coin, seed):
    mdp = build_gridworld(GridWorldSpec(side=side, reverse_prob=reverse,
                                        reward_coin_prob=coin, rng_seed=seed))
    assert np.all(mdp.transition >= 0)
    assert np.max(np.abs(mdp.transition.sum(axis=2) - 1.0)) <= 1e-12


def test_embedding_is_row_col():
    emb = grid_embedding(5)
    np.testing.assert_array_equal(emb[cell_index(3, 1, 5)], [3.0, 1.0])


def test_deterministic_policy_on_deterministic_mdp_gives_unique_path():
    mdp = random_mdp(np.random.default_rng(0), 4, 3, gamma=1.0, horizon=6, deterministic=True)
    logits = np.full((4, 3), -50.0)
    logits[:, 2] = 50.0
    policy = LogitPolicy(logits)
    nxt = np.argmax(mdp.transition, axis=2)
    a = rollout(mdp, policy, np.random.default_rng(1))
    s = a.states[0]
    for t in range(6):
        assert a.states[t] == s and a.actions[t] == 2
        s = nxt[s, 2]


def test_same_seed_same_trajectory():
    mdp = build_gridworld(GridWorldSpec())
    pol = LogitPolicy(np.random.default_rng(3).normal(size=(25, 4)))
    a = rollouts(mdp, pol, np.random.default_rng(9), 5)
    b = [rollout(mdp, pol, g) for g in [np.random.default_rng(9)] for _ in range(5)]
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x.states, y.states)
        np.testing.assert_array_equal(x.actions, y.actions)
        np.testing.assert_array_equal(x.rewards, y.rewards)


def test_no_reversal_deterministic_policy_ignores_seed():
    mdp = build_gridworld(GridWorldSpec(reverse_prob=0.0))
    logits = np.zeros((25, 4))
    logits[:, 3] = 100.0
    pol = LogitPolicy(logits)
    ref = rollout(mdp, pol, np.random.default_rng(0))
    for seed in range(1, 6):
        other = rollout(mdp, pol, np.random.default_rng(seed))
        np.testing.assert_array_equal(ref.states, other.states)


def test_uniform_action_frequencies_two_states():
    P = np.full((2, 2, 2), 0.5)
    mdp = TabularMdp(P, np.zeros((2, 2)), 1.0, 1, np.array([0.5, 0.5]))
    n = 100_000
    trajs = rollouts(mdp, LogitPolicy.uniform(2, 2), np.random.default_rng(4), n)
    freq = np.mean([t.actions[0] for t in trajs])
    assert abs(freq - 0.5) < 3 * np.sqrt(0.25 / n)


def test_rollout_records_realized_destination_reward():
    mdp = build_gridworld(GridWorldSpec(rng_seed=2))
    traj = rollout(mdp, LogitPolicy.uniform(25, 4), np.random.default_rng(0))
    nxt = np.append(traj.states[1:], traj.final_state)
    np.testing.assert_array_equal(traj.rewards, mdp.destination_reward[nxt])


def test_dimension_mismatch_raises():
    mdp = build_gridworld(GridWorldSpec())
    with pytest.raises(ValueError):
        rollout(mdp, LogitPolicy.uniform(24, 4), np.random.default_rng(0))


def test_trajectory_return_examples():
    z = Trajectory(np.zeros(3, int), np.zeros(3, int), np.zeros(3))
    assert trajectory_return(z, 0.9) == 0.0
    two = Trajectory(np.zeros(2, int), np.zeros(2, int), np.ones(2))
    assert trajectory_return(two, 0.5) == 1.5
    r = np.random.default_rng(0).normal(size=20)
    t = Trajectory(np.zeros(20, int), np.zeros(20, int), r)
    assert trajectory_return(t, 1.0) == np.sum(r)


def test_batch_returns_unbiased_for_uniform_policy():
    mdp = build_gridworld(GridWorldSpec(rng_seed=0))
    probs = np.full((25, 4), 0.25)
    g = batch_returns(mdp, probs, np.random.default_rng(0), 20_000)
    exact = occupancy_return(mdp, probs)
    assert abs(g.mean() - exact) < 3 * g.std(ddof=1) / np.sqrt(g.size)
