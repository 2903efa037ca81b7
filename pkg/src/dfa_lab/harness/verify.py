"""Numerical certification of the preference-loss theory on small random
instances.  Every check carries its own oracle and reports a residual."""

from __future__ import annotations

import itertools
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import softmax

from ..dfa import minimize_population_loss, population_pref_grad, population_pref_loss
from ..mdp import Trajectory, random_mdp
from ..preference import exact_pref_matrix
from ..replay import (ReplayBuffer, TabularCritic, _nearest_entry,
                      policy_improvement_from_critic, synthesize_batch)
from ..soft import gibbs_policy, policy_entropy, soft_return, soft_v, soft_value_iteration

DEFAULT_TOLERANCES = {
    "gibbs_recovery": 1e-4,
    "gradient_fd": 1e-6,
    "gradient_zero_sum": 1e-12,
    "traj_state_consistency": 1e-6,
    "soft_value_identity": 1e-10,
    "critic_improvement": 1e-4,
    "synthesizer_ordering": 0.0,
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    seconds: float
    detail: str = ""


@dataclass
class VerifyReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [asdict(c) for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def random_pstar(rng: np.random.Generator, n_actions: int) -> np.ndarray:
    """A valid (not necessarily Bradley-Terry) preference matrix."""
    p = np.full((n_actions, n_actions), 0.5)
    iu = np.triu_indices(n_actions, 1)
    p[iu] = rng.uniform(0.05, 0.95, size=len(iu[0]))
    p[(iu[1], iu[0])] = 1.0 - p[iu]
    return p


# -- individual checks ----------------------------------------------------------

def check_gibbs_recovery(rng, n_mdps=20, alphas=(0.5, 1.0), betas=(1.0, 2.0), gamma=0.9):
    """Population-loss minimizer versus the Gibbs policy of the soft-optimal Q."""
    worst = 0.0
    for _ in range(n_mdps):
        mdp = random_mdp(rng, int(rng.integers(1, 6)), int(rng.integers(2, 6)), gamma)
        for alpha, beta in itertools.product(alphas, betas):
            values = soft_value_iteration(mdp, alpha / beta)
            pstar = np.stack([exact_pref_matrix(values, s, beta) for s in range(mdp.n_states)])
            recovered = np.exp(minimize_population_loss(pstar, alpha))
            target = gibbs_policy(values, beta / alpha).probs()
            worst = max(worst, float(np.max(np.abs(recovered - target))))
    return worst, f"{n_mdps} MDPs x alpha {alphas} x beta {betas}"


def _fd_grad(logits, pstar, alpha, h):
    g = np.zeros_like(logits)
    for k in range(logits.size):
        e = np.zeros_like(logits)
        e[k] = h
        g[k] = (population_pref_loss(logits + e, pstar, alpha)
                - population_pref_loss(logits - e, pstar, alpha)) / (2 * h)
    return g


def _gradient_instances(rng, n):
    for _ in range(n):
        A = int(rng.integers(2, 7))
        yield (rng.normal(0.0, 1.5, A), random_pstar(rng, A),
               float(np.exp(rng.uniform(np.log(0.1), np.log(2.0)))))


def check_gradient_fd(rng, n=100, h=1e-6, gradient_fn=population_pref_grad):
    worst = 0.0
    for logits, pstar, alpha in _gradient_instances(rng, n):
        g = gradient_fn(logits, pstar, alpha)
        fd = _fd_grad(logits, pstar, alpha, h)
        worst = max(worst, float(np.max(np.abs(g - fd)) / max(np.max(np.abs(fd)), 1e-300)))
    return worst, f"{n} random (logits, pstar, alpha) instances, central step {h:g}"


def check_zero_sum(rng, n=100, gradient_fn=population_pref_grad):
    worst = 0.0
    for logits, pstar, alpha in _gradient_instances(rng, n):
        worst = max(worst, abs(float(np.sum(gradient_fn(logits, pstar, alpha)))))
    return worst, f"{n} random instances"


def _enumerate_paths(mdp, s0):
    """All action sequences from ``s0`` in a deterministic MDP."""
    nxt = np.argmax(mdp.transition, axis=2)
    H = mdp.horizon
    for acts in itertools.product(range(mdp.n_actions), repeat=H):
        s = s0
        states, rewards = [], []
        for a in acts:
            states.append(s)
            rewards.append(mdp.reward[s, a])
            s = int(nxt[s, a])
        yield Trajectory(np.array(states), np.array(acts), np.array(rewards), final_state=s)


def check_traj_state(rng, n_mdps=10, horizon=3):
    """prod_t pi_t(a_t|s_t) / exp((beta/alpha) G*(tau)) is constant per start state.

    G* is the entropy-bonus return of the soft-optimal policy under the
    entropy-augmented Bellman backup; deterministic transitions, gamma = 1.
    """
    worst = 0.0
    for _ in range(n_mdps):
        mdp = random_mdp(rng, int(rng.integers(1, 4)), 2, gamma=1.0, horizon=horizon,
                         deterministic=True)
        alpha, beta = float(rng.uniform(0.3, 1.0)), float(rng.uniform(0.5, 2.0))
        lam = alpha / beta
        values = soft_value_iteration(mdp, lam, convention="entropy-augmented")
        policy = gibbs_policy(values, 1.0 / lam)
        logp = policy.log_probs()
        for s0 in range(mdp.n_states):
            logs = []
            for traj in _enumerate_paths(mdp, s0):
                loglik = float(np.sum(logp[np.arange(horizon), traj.states, traj.actions]))
                g = soft_return(traj, policy, lam, 1.0)
                logs.append(loglik - g / lam)
            logs = np.array(logs)
            worst = max(worst, float(np.max(np.abs(np.expm1(logs - logs[0])))))
    return worst, f"{n_mdps} deterministic MDPs, 2 actions, horizon {horizon}"


def check_soft_value(rng, n_mdps=10):
    """V = lam logsumexp(Q / lam) = E_pi[Q] + lam H(pi) for pi = softmax(Q / lam)."""
    worst = 0.0
    for _ in range(n_mdps):
        mdp = random_mdp(rng, int(rng.integers(1, 6)), int(rng.integers(2, 6)), 0.9)
        lam = float(rng.uniform(0.2, 2.0))
        values = soft_value_iteration(mdp, lam, tol=1e-13)
        pi = softmax(values.q / lam, axis=1)
        variational = np.sum(pi * values.q, axis=1) + lam * policy_entropy(values.q, lam)
        worst = max(worst, float(np.max(np.abs(values.v - soft_v(values.q, lam)))),
                    float(np.max(np.abs(values.v - variational))))
        # the fixed point itself: Q = r + gamma P V
        residual = values.q - (mdp.reward + mdp.gamma * mdp.transition @ values.v)
        worst = max(worst, float(np.max(np.abs(residual))))
    return worst, f"{n_mdps} discounted MDPs"


def check_critic_improvement(rng, n=20):
    """DFA steps on exact labels from a frozen critic reach softmax((beta/alpha) Q)."""
    worst = 0.0
    for _ in range(n):
        S, A = int(rng.integers(1, 7)), int(rng.integers(2, 6))
        q = rng.normal(0.0, 1.0, (S, A))
        alpha, beta = float(rng.choice([0.5, 1.0])), float(rng.choice([1.0, 2.0]))
        pi = policy_improvement_from_critic(q, alpha, beta)
        worst = max(worst, float(np.max(np.abs(pi - softmax(beta / alpha * q, axis=1)))))
    return worst, f"{n} random critics"


def brute_force_nearest(buffer: ReplayBuffer, eid: int) -> int:
    """Exhaustive-scan oracle: closest embedding, most recent on ties."""
    s = buffer.entry(eid)[0]
    best = None
    for other in buffer.ids():
        if other == eid:
            continue
        d = float(np.sum((buffer.embedding[s] - buffer.embedding[buffer.entry(other)[0]]) ** 2))
        key = (d, -int(other))
        if best is None or key < best[0]:
            best = (key, int(other))
    return best[1]


def random_buffer(rng, n_states=None, capacity=None, fill=None, tied=None):
    """A replay buffer with random contents; ``tied`` uses integer grid
    embeddings so distance ties are common."""
    S = n_states or int(rng.integers(2, 12))
    tied = bool(rng.integers(0, 2)) if tied is None else tied
    if tied:
        emb = rng.integers(0, 3, size=(S, 2)).astype(float)
    else:
        emb = rng.normal(size=(S, int(rng.integers(1, 4))))
    capacity = capacity or int(rng.integers(5, 60))
    buf = ReplayBuffer(capacity, emb)
    for _ in range(fill or int(rng.integers(2, 2 * capacity))):
        buf.push(int(rng.integers(S)), int(rng.integers(4)), float(rng.normal()),
                 int(rng.integers(S)))
    if len(buf) < 2:
        buf.push(int(rng.integers(S)), int(rng.integers(4)), 0.0, int(rng.integers(S)))
    return buf


def check_synthesizer(rng, n_pairs=100_000, n_queries=10_000):
    """Fraction of synthesized pairs violating q(s,a+) >= q(s,a-), plus the
    number of nearest-neighbour mismatches against the exhaustive scan."""
    violations = produced = 0
    while produced < n_pairs:
        buf = random_buffer(rng)
        q = rng.normal(size=(buf.n_states, 4))
        if rng.random() < 0.3:
            q = np.round(q)  # exact Q ties
        critic = TabularCritic(q)
        for p in synthesize_batch(buf, critic, buf.sample_ids(rng, 256)):
            produced += 1
            violations += q[p.state, p.preferred] < q[p.state, p.rejected]
    mismatches = 0
    done = 0
    while done < n_queries:
        buf = random_buffer(rng)
        for eid in buf.sample_ids(rng, 50):
            mismatches += _nearest_entry(buf, buf.entry(int(eid))[0], int(eid)) != \
                brute_force_nearest(buf, int(eid))
            done += 1
    residual = violations / produced + mismatches
    return float(residual), (f"{produced} pairs, {violations} ordering violations; "
                             f"{done} nearest-state queries, {mismatches} mismatches")


_CHECKS = (
    ("gibbs_recovery", check_gibbs_recovery),
    ("gradient_fd", check_gradient_fd),
    ("gradient_zero_sum", check_zero_sum),
    ("traj_state_consistency", check_traj_state),
    ("soft_value_identity", check_soft_value),
    ("critic_improvement", check_critic_improvement),
    ("synthesizer_ordering", check_synthesizer),
)

CHECK_NAMES = tuple(name for name, _ in _CHECKS)


def verify_suite(tolerances: dict | None = None, seed: int = 0, only=None,
                 gradient_fn=population_pref_grad) -> VerifyReport:
    """Run the checks (all, or the names in ``only``) and collect a report.

    Each check draws from its own stream derived from ``seed``.  Failures and
    exceptions become report entries; nothing is raised.  ``gradient_fn``
    replaces the analytic population gradient in the gradient checks, which
    is how the harness itself is fault-tested.
    """
    tol = dict(DEFAULT_TOLERANCES)
    if tolerances:
        unknown = set(tolerances) - set(tol)
        if unknown:
            raise ValueError(f"unknown tolerance keys: {', '.join(sorted(unknown))}")
        tol.update(tolerances)
    selected = [c for c in _CHECKS if only is None or c[0] in only]
    streams = np.random.SeedSequence(seed).spawn(len(_CHECKS))
    report = VerifyReport()
    for (name, fn), stream in zip(_CHECKS, streams):
        if (name, fn) not in selected:
            continue
        rng = np.random.default_rng(stream)
        kwargs = {"gradient_fn": gradient_fn} if name.startswith("gradient") else {}
        start = time.perf_counter()
        try:
            residual, detail = fn(rng, **kwargs)
            passed = bool(residual <= tol[name])
        except Exception as exc:  # a crashing check is a failed check
            residual, detail, passed = float("inf"), f"{type(exc).__name__}: {exc}", False
        report.checks.append(CheckResult(name, passed, float(residual), tol[name],
                                         time.perf_counter() - start, detail))
    return report
