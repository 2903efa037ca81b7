import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfa_lab.mdp import Trajectory
from dfa_lab.preference import (AnnotatorPanel, StatePrefPair, TrajPrefPair,
                                annotate_state, annotate_trajectories, exact_pref_matrix,
                                load_pairs, pref_matrix_from_q, save_state_pairs,
                                save_traj_pairs)
from dfa_lab.soft import SoftValues


def traj(total, h=4):
    r = np.zeros(h)
    r[0] = total
    return Trajectory(np.zeros(h, int), np.zeros(h, int), r)


def values(q_row):
    return SoftValues(np.array([q_row], dtype=float), np.zeros(1), 1.0, "discounted-fixed-point")


def preferred_rate(panel, a, b, n):
    return np.mean([annotate_trajectories(panel, a, b).preferred is a for _ in range(n)])


def test_large_gap_large_panel_always_prefers_better():
    panel = AnnotatorPanel(500, 1.0, np.random.default_rng(0))
    a, b = traj(10.0), traj(0.0)
    assert preferred_rate(panel, a, b, 2000) == 1.0


def test_single_annotator_is_bernoulli():
    panel = AnnotatorPanel(1, 1.0, np.random.default_rng(1))
    n = 20_000
    rate = preferred_rate(panel, traj(np.log(3.0)), traj(0.0), n)
    assert abs(rate - 0.75) < 3 * np.sqrt(0.75 * 0.25 / n)


def test_identical_trajectories_even_panel_coin():
    panel = AnnotatorPanel(500, 1.0, np.random.default_rng(2))
    t = traj(1.0)
    u = Trajectory(t.states, t.actions, t.rewards.copy())
    rate = preferred_rate(panel, t, u, 10_000)
    assert 0.47 <= rate <= 0.53


def test_swap_symmetry():
    a, b = traj(0.4), traj(0.0)
    n = 20_000
    fwd = preferred_rate(AnnotatorPanel(11, 1.0, np.random.default_rng(3)), a, b, n)
    rev = np.mean([annotate_trajectories(AnnotatorPanel(11, 1.0, g), b, a).preferred is a
                   for g in [np.random.default_rng(4)] for _ in range(n)])
    assert abs(fwd - rev) < 4 * np.sqrt(2 * 0.25 / n)


def test_majority_sharpens_with_panel_size():
    a, b = traj(0.5), traj(0.0)
    rates = [preferred_rate(AnnotatorPanel(m, 1.0, np.random.default_rng(5)), a, b, 4000)
             for m in (1, 11, 501)]
    assert rates[0] < rates[1] < rates[2]
    assert rates[2] > 0.99


def test_panel_validation():
    with pytest.raises(ValueError):
        AnnotatorPanel(0)
    with pytest.raises(ValueError):
        AnnotatorPanel(5, beta=0.0)


def test_annotate_state_examples():
    rng = np.random.default_rng(6)
    sharp = values([1.0, 0.0])
    assert all(annotate_state(sharp, 0, 0, 1, 1e6, rng).preferred == 0 for _ in range(1000))
    n = 10_000
    even = np.mean([annotate_state(values([0.5, 0.5]), 0, 0, 1, 1.0, rng).preferred == 0
                    for _ in range(n)])
    assert abs(even - 0.5) < 3 * np.sqrt(0.25 / n)
    ln3 = np.mean([annotate_state(values([np.log(3.0), 0.0]), 0, 0, 1, 1.0, rng).preferred == 0
                   for _ in range(n)])
    assert abs(ln3 - 0.75) < 3 * np.sqrt(0.75 * 0.25 / n)
    with pytest.raises(ValueError):
        annotate_state(sharp, 0, 1, 1, 1.0, rng)


def test_exact_pref_matrix_examples():
    P = exact_pref_matrix(values([0.0, 1.0, 2.0]), 0, 1.0)
    assert P[2, 0] == pytest.approx(1 / (1 + np.exp(-2.0)), abs=1e-15)
    np.testing.assert_allclose(np.diag(P), 0.5)
    np.testing.assert_allclose(exact_pref_matrix(values([3.0] * 4), 0, 2.0), 0.5)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-20, 20), min_size=2, max_size=6), st.floats(0.01, 5))
def test_pref_matrix_complement(q, beta):
    P = pref_matrix_from_q(np.array(q), beta)
    np.testing.assert_allclose(P + P.T, 1.0, atol=1e-12)


def test_pair_validation():
    with pytest.raises(ValueError):
        StatePrefPair(0, 1, 1)
    with pytest.raises(ValueError):
        TrajPrefPair(traj(0.0, 3), traj(0.0, 4))


def test_state_pairs_round_trip(tmp_path):
    pairs = [StatePrefPair(0, 1, 2), StatePrefPair(3, 0, 1)]
    path = tmp_path / "pairs.txt"
    save_state_pairs(pairs, path)
    assert path.read_text() == "S 0 1 2\nS 3 0 1\n"
    assert load_pairs(path) == pairs


def test_traj_pairs_round_trip(tmp_path):
    rng = np.random.default_rng(7)
    pairs = [TrajPrefPair(*(Trajectory(rng.integers(0, 5, 3), rng.integers(0, 4, 3),
                                       rng.normal(size=3)) for _ in range(2)))
             for _ in range(3)]
    save_traj_pairs(pairs, tmp_path / "p.txt", tmp_path / "t.txt")
    back = load_pairs(tmp_path / "p.txt", tmp_path / "t.txt")
    for x, y in zip(pairs, back):
        for u, v in ((x.preferred, y.preferred), (x.rejected, y.rejected)):
            np.testing.assert_array_equal(u.states, v.states)
            np.testing.assert_array_equal(u.actions, v.actions)
            np.testing.assert_array_equal(u.rewards, v.rewards)


def test_malformed_pairs_file(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("X 1 2\n")
    with pytest.raises(ValueError):
        load_pairs(path)
    path.write_text("T 0 1\n")
    with pytest.raises(ValueError):
        load_pairs(path)
