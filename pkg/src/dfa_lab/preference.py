"""Simulated Bradley-Terry annotators and preference datasets."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mdp import Trajectory, trajectory_return
from .policy import sigmoid
from .soft import SoftValues, bt_state_prob


@dataclass(frozen=True)
class StatePrefPair:
    state: int
    preferred: int
    rejected: int

    def __post_init__(self):
        if self.preferred == self.rejected:
            raise ValueError("preferred and rejected actions must differ")


@dataclass(frozen=True)
class TrajPrefPair:
    preferred: Trajectory
    rejected: Trajectory

    def __post_init__(self):
        if len(self.preferred) != len(self.rejected):
            raise ValueError("paired trajectories must share the same horizon")


class AnnotatorPanel:
    """M independent Bradley-Terry annotators with a shared sharpness ``beta``.

    The panel owns its random stream; the recorded label is the majority vote,
    with exact ties (even M) settled by a fair coin.
    """

    def __init__(self, panel_size: int = 500, beta: float = 1.0, rng=None):
        if int(panel_size) < 1:
            raise ValueError("panel_size must be at least 1")
        if beta <= 0:
            raise ValueError("beta must be positive")
        self.panel_size = int(panel_size)
        self.beta = float(beta)
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    def vote_prob(self, return_a: float, return_b: float) -> float:
        return float(sigmoid(self.beta * (return_a - return_b)))

    def majority_prefers_first(self, p_first: float) -> bool:
        votes = self.rng.binomial(self.panel_size, p_first)
        twice = 2 * votes
        if twice > self.panel_size:
            return True
        if twice < self.panel_size:
            return False
        return bool(self.rng.random() < 0.5)


def annotate_trajectories(panel: AnnotatorPanel, tau_a: Trajectory, tau_b: Trajectory,
                          gamma: float = 1.0) -> TrajPrefPair:
    """Label a trajectory pair by majority vote over realized returns."""
    p = panel.vote_prob(trajectory_return(tau_a, gamma), trajectory_return(tau_b, gamma))
    if panel.majority_prefers_first(p):
        return TrajPrefPair(tau_a, tau_b)
    return TrajPrefPair(tau_b, tau_a)


def annotate_state(values: SoftValues, s: int, a: int, b: int, beta: float,
                   rng: np.random.Generator) -> StatePrefPair:
    """Sample a state-wise label with probability sigma(beta * (Q(s,a) - Q(s,b)))."""
    if a == b:
        raise ValueError("cannot compare an action with itself")
    if rng.random() < bt_state_prob(values, s, a, b, beta):
        return StatePrefPair(s, a, b)
    return StatePrefPair(s, b, a)


def exact_pref_matrix(values: SoftValues, s: int, beta: float, t: int = 0) -> np.ndarray:
    """Full matrix P[a, b] = sigma(beta * (Q(s,a) - Q(s,b))); diagonal is 0.5."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return pref_matrix_from_q(values.q_at(s, t), beta)


def pref_matrix_from_q(q_row: np.ndarray, beta: float) -> np.ndarray:
    q_row = np.asarray(q_row, dtype=np.float64)
    return sigmoid(beta * (q_row[:, None] - q_row[None, :]))


# -- text serialization ------------------------------------------------------
#
# Pairs file:   "S <state> <a+> <a->"  or  "T <traj_id+> <traj_id->"
# Trajectories: one line per trajectory, "<id> s0 a0 s1 a1 ...", optionally
#               followed by " | r0 r1 ..." with the realized rewards.

def save_state_pairs(pairs, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(f"S {p.state} {p.preferred} {p.rejected}\n")


def save_traj_pairs(pairs, pairs_path, traj_path) -> None:
    with open(traj_path, "w", encoding="utf-8", newline="\n") as tf, \
            open(pairs_path, "w", encoding="utf-8", newline="\n") as pf:
        for k, pair in enumerate(pairs):
            ids = []
            for j, traj in enumerate((pair.preferred, pair.rejected)):
                tid = 2 * k + j
                flat = np.stack([traj.states, traj.actions], axis=1).ravel()
                rewards = " ".join(repr(float(x)) for x in traj.rewards)
                tf.write(f"{tid} {' '.join(map(str, flat.tolist()))} | {rewards}\n")
                ids.append(tid)
            pf.write(f"T {ids[0]} {ids[1]}\n")


def load_trajectories(path) -> dict[int, Trajectory]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        head, _, tail = line.partition("|")
        fields = head.split()
        tid, flat = int(fields[0]), [int(x) for x in fields[1:]]
        if len(flat) % 2:
            raise ValueError(f"{path}:{lineno}: odd number of state/action entries")
        sa = np.array(flat).reshape(-1, 2)
        rewards = [float(x) for x in tail.split()] if tail.strip() else [0.0] * len(sa)
        out[tid] = Trajectory(sa[:, 0], sa[:, 1], np.array(rewards))
    return out


def load_pairs(path, traj_path=None):
    """Read a pairs file; returns a list of StatePrefPair and TrajPrefPair."""
    trajs = load_trajectories(traj_path) if traj_path is not None else None
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        fields = line.split()
        if not fields:
            continue
        if fields[0] == "S" and len(fields) == 4:
            out.append(StatePrefPair(*map(int, fields[1:])))
        elif fields[0] == "T" and len(fields) == 3:
            if trajs is None:
                raise ValueError(f"{path}:{lineno}: trajectory pair without a trajectory file")
            out.append(TrajPrefPair(trajs[int(fields[1])], trajs[int(fields[2])]))
        else:
            raise ValueError(f"{path}:{lineno}: malformed preference line {line!r}")
    return out
