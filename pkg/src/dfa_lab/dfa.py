"""Dual-Feedback Actor: preference probabilities and losses computed from the
policy's own log-probabilities, their gradients, and the training loops that
use them.

All probabilities are evaluated in log space:
``P(a+ > a-) = sigmoid(alpha * (log pi(a+|s) - log pi(a-|s)))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .harness.evaluation import EvalSchedule
from .harness.records import RunRecord
from .mdp import TabularMdp, rollouts
from .optim import make_optimizer
from .policy import LogitPolicy, log_sigmoid, sigmoid
from .preference import AnnotatorPanel, annotate_trajectories
from .soft import ConvergenceError


@dataclass(frozen=True)
class DfaConfig:
    alpha: float = 1e-3
    learning_rate: float = 3e-2
    iterations: int = 100_000
    pairs_per_iter: int = 1
    optimizer: str = "adam"
    reweight_pairs: bool = False

    def __post_init__(self):
        if self.alpha <= 0 or self.learning_rate <= 0:
            raise ValueError("alpha and learning_rate must be positive")
        if self.iterations < 0 or self.pairs_per_iter < 1:
            raise ValueError("iterations must be >= 0 and pairs_per_iter >= 1")
        make_optimizer(self.optimizer, self.learning_rate)


# -- state-wise preferences ----------------------------------------------------

def _state_pair_arrays(dataset):
    if isinstance(dataset, tuple) and len(dataset) == 3:
        s, ap, am = (np.asarray(x, dtype=np.int64) for x in dataset)
    else:
        if len(dataset) == 0:
            raise ValueError("preference dataset is empty")
        arr = np.array([(p.state, p.preferred, p.rejected) for p in dataset], dtype=np.int64)
        s, ap, am = arr[:, 0], arr[:, 1], arr[:, 2]
    if s.size == 0:
        raise ValueError("preference dataset is empty")
    return s, ap, am


def _pair_weights(s, ap, am, reweight):
    if not reweight:
        return np.full(s.size, 1.0 / s.size)
    _, inverse, counts = np.unique(np.stack([s, ap, am], axis=1), axis=0,
                                   return_inverse=True, return_counts=True)
    w = 1.0 / counts[inverse.ravel()]
    return w / w.sum()


def pref_prob(policy: LogitPolicy, s: int, a_plus: int, a_minus: int) -> float:
    """pi(a+|s)^alpha / (pi(a+|s)^alpha + pi(a-|s)^alpha)."""
    if a_plus == a_minus:
        raise ValueError("a_plus and a_minus must differ")
    logits = policy.logits[s]
    # softmax normalizer cancels in the difference of log-probabilities
    return float(sigmoid(policy.alpha * (logits[a_plus] - logits[a_minus])))


def pref_loss(policy: LogitPolicy, dataset, reweight_pairs: bool = False) -> float:
    """Mean of -log P(a+ > a- | s) over a state-wise dataset.

    ``dataset`` is a sequence of StatePrefPair or a (states, a_plus, a_minus)
    tuple of index arrays.
    """
    s, ap, am = _state_pair_arrays(dataset)
    w = _pair_weights(s, ap, am, reweight_pairs)
    gap = policy.logits[s, ap] - policy.logits[s, am]
    return float(-np.sum(w * log_sigmoid(policy.alpha * gap)))


def pref_loss_grad(policy: LogitPolicy, dataset, reweight_pairs: bool = False) -> np.ndarray:
    """Gradient of :func:`pref_loss` with respect to the logit table."""
    s, ap, am = _state_pair_arrays(dataset)
    w = _pair_weights(s, ap, am, reweight_pairs)
    alpha = policy.alpha
    gap = policy.logits[s, ap] - policy.logits[s, am]
    coef = -alpha * w * sigmoid(-alpha * gap)
    S, A = policy.logits.shape
    g = np.bincount(s * A + ap, weights=coef, minlength=S * A)
    g -= np.bincount(s * A + am, weights=coef, minlength=S * A)
    return g.reshape(S, A)


# -- population loss at a single state --------------------------------------------

def _check_pstar(pstar):
    pstar = np.asarray(pstar, dtype=np.float64)
    if pstar.ndim < 2 or pstar.shape[-1] != pstar.shape[-2]:
        raise ValueError("pstar must be a square preference matrix")
    if np.any(pstar <= 0) or np.any(pstar >= 1):
        raise ValueError("pstar entries must lie strictly inside (0, 1)")
    if np.max(np.abs(pstar + np.swapaxes(pstar, -1, -2) - 1.0)) > 1e-9:
        raise ValueError("pstar must satisfy P[a,b] + P[b,a] = 1")
    return pstar


def population_pref_loss(logits_row, pstar, alpha: float) -> float:
    """-(1/|A|^2) sum over ordered pairs (a, b), diagonal included, of
    P*(a > b) log sigmoid(alpha (l_a - l_b))."""
    pstar = _check_pstar(pstar)
    l = np.asarray(logits_row, dtype=np.float64)
    A = l.shape[-1]
    diff = l[..., :, None] - l[..., None, :]
    return -np.sum(pstar * log_sigmoid(alpha * diff), axis=(-2, -1)) / A**2


def population_pref_grad(logits_row, pstar, alpha: float) -> np.ndarray:
    """-(alpha/|A|^2) * sum_{b != k} (P*_kb - P_kb(l)) for every action k.

    Works row-wise on stacked inputs of shape (..., A) and (..., A, A).
    """
    pstar = _check_pstar(pstar)
    return _population_grad(np.asarray(logits_row, dtype=np.float64), pstar, alpha)


def _population_grad(l, pstar, alpha):
    A = l.shape[-1]
    p = sigmoid(alpha * (l[..., :, None] - l[..., None, :]))
    # diagonal terms cancel (both 1/2)
    return -(alpha / A**2) * np.sum(pstar - p, axis=-1)


def minimize_population_loss(pstar, alpha: float, learning_rate: float | None = None,
                             tol: float = 1e-8, max_iter: int = 200_000,
                             init=None) -> np.ndarray:
    """Minimize the population loss by accelerated gradient descent.

    ``pstar`` may be (A, A) or a stack (S, A, A); states are solved jointly
    but independently.  Returns log-probabilities (gauge fixed so each row's
    exponentials sum to one).  The default step is the reciprocal of the
    largest possible Hessian eigenvalue, 2|A|^2 / (alpha^2 (|A| - 1)).

    Raises ConvergenceError if the gradient max-norm is still above ``tol``
    after ``max_iter`` steps.
    """
    pstar = _check_pstar(pstar)
    A = pstar.shape[-1]
    if learning_rate is None:
        learning_rate = 2.0 * A**2 / (alpha**2 * max(A - 1, 1))
    x = np.zeros(pstar.shape[:-1]) if init is None else np.array(init, dtype=np.float64)
    y = x.copy()
    momentum_t = 1.0
    residual = np.inf
    for _ in range(max_iter):
        g = _population_grad(x, pstar, alpha)
        residual = float(np.max(np.abs(g))) if g.size else 0.0
        if residual < tol:
            return x - _logsumexp_rows(x)
        gy = _population_grad(y, pstar, alpha)
        x_next = y - learning_rate * gy
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * momentum_t**2))
        # gradient-based restart keeps the momentum scheme monotone enough
        if np.sum(gy * (x_next - x)) > 0:
            t_next = 1.0
            y = x_next
        else:
            y = x_next + ((momentum_t - 1.0) / t_next) * (x_next - x)
        x, momentum_t = x_next, t_next
    raise ConvergenceError("population loss minimization did not converge", residual)


def _logsumexp_rows(x):
    m = np.max(x, axis=-1, keepdims=True)
    return m + np.log(np.sum(np.exp(x - m), axis=-1, keepdims=True))


# -- trajectory-wise preferences --------------------------------------------------

def trajectory_loglik(policy: LogitPolicy, traj) -> float:
    """sum_t log pi(a_t | s_t)."""
    logp = policy.log_probs()
    if policy.time_indexed:
        return float(np.sum(logp[np.arange(len(traj)), traj.states, traj.actions]))
    return float(np.sum(logp[traj.states, traj.actions]))


def traj_pref_prob(policy: LogitPolicy, tau_plus, tau_minus) -> float:
    gap = trajectory_loglik(policy, tau_plus) - trajectory_loglik(policy, tau_minus)
    return float(sigmoid(policy.alpha * gap))


def _traj_pairs(dataset):
    pairs = list(dataset)
    if not pairs:
        raise ValueError("trajectory preference dataset is empty")
    return pairs


def traj_pref_loss(policy: LogitPolicy, dataset) -> float:
    """Mean of -log P_traj(tau+ > tau-) over the dataset."""
    pairs = _traj_pairs(dataset)
    logp = policy.log_probs()
    gaps = np.array([_loglik(logp, policy, p.preferred) - _loglik(logp, policy, p.rejected)
                     for p in pairs])
    return float(-np.mean(log_sigmoid(policy.alpha * gaps)))


def _loglik(logp, policy, traj):
    if policy.time_indexed:
        return float(np.sum(logp[np.arange(len(traj)), traj.states, traj.actions]))
    return float(np.sum(logp[traj.states, traj.actions]))


def traj_pref_loss_grad(policy: LogitPolicy, dataset) -> np.ndarray:
    """Gradient of :func:`traj_pref_loss` with respect to the logits.

    d log pi(tau) / d l[s, b] = N_tau(s, b) - n_tau(s) pi(b|s).
    """
    pairs = _traj_pairs(dataset)
    alpha = policy.alpha
    probs = policy.probs()
    logp = np.log(probs) if np.all(probs > 0) else policy.log_probs()
    shape = policy.logits.shape
    A = shape[-1]
    flat_sa = []
    weights = []
    for p in pairs:
        gap = _loglik(logp, policy, p.preferred) - _loglik(logp, policy, p.rejected)
        coef = -alpha * float(sigmoid(-alpha * gap)) / len(pairs)
        for traj, sign in ((p.preferred, coef), (p.rejected, -coef)):
            if policy.time_indexed:
                idx = (np.arange(len(traj)) * shape[1] + traj.states) * A + traj.actions
            else:
                idx = traj.states * A + traj.actions
            flat_sa.append(idx)
            weights.append(np.full(idx.size, sign))
    idx = np.concatenate(flat_sa)
    w = np.concatenate(weights)
    counts = np.bincount(idx, weights=w, minlength=probs.size).reshape(shape)
    visits = counts.sum(axis=-1, keepdims=True)
    return counts - visits * probs


# -- on-policy training loop ---------------------------------------------------------

def dfa_train_onpolicy(mdp: TabularMdp, panel: AnnotatorPanel, config: DfaConfig,
                       rng: np.random.Generator, *, eval_episodes: int = 100,
                       eval_interval: int = 2000, eval_rng=None,
                       algorithm: str = "dfa", seed: int = 0,
                       init: LogitPolicy | None = None):
    """Train a stationary policy from trajectory preferences on fresh rollouts.

    Each iteration rolls out ``2 * pairs_per_iter`` trajectories from the
    current policy, has the panel label them pairwise, and takes one optimizer
    step on the trajectory preference loss.  Returns the policy and a
    RunRecord of average true return against environment steps.
    """
    policy = init.copy() if init is not None else LogitPolicy.uniform(
        mdp.n_states, mdp.n_actions)
    policy.alpha = config.alpha
    opt = make_optimizer(config.optimizer, config.learning_rate)
    record = RunRecord(algorithm, seed)
    schedule = EvalSchedule(mdp, record, eval_interval, eval_episodes,
                            eval_rng if eval_rng is not None else np.random.default_rng(seed))
    steps = 0
    schedule.update(steps, policy)
    n_traj = 2 * config.pairs_per_iter
    for _ in range(config.iterations):
        trajs = rollouts(mdp, policy, rng, n_traj)
        steps += n_traj * mdp.horizon
        pairs = [annotate_trajectories(panel, trajs[2 * k], trajs[2 * k + 1], gamma=1.0)
                 for k in range(config.pairs_per_iter)]
        grad = traj_pref_loss_grad(policy, pairs)
        opt.step(policy.logits, grad)
        schedule.update(steps, policy)
    return policy, record
