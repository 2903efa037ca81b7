import numpy as np
import pytest

from dfa_lab.mdp import TabularMdp


def corridor_mdp(horizon=3):
    """Two cells.  From cell 0, action 1 steps right and earns 1; action 0
    stays for 0.  Cell 1 is absorbing with zero reward."""
    P = np.zeros((2, 2, 2))
    P[0, 0, 0] = 1.0
    P[0, 1, 1] = 1.0
    P[1, :, 1] = 1.0
    r = np.array([[0.0, 1.0], [0.0, 0.0]])
    return TabularMdp(P, r, gamma=1.0, horizon=horizon, initial_dist=np.array([1.0, 0.0]))


def occupancy_return(mdp, probs):
    """Exact expected finite-horizon return of a stationary policy."""
    d = mdp.initial_dist.copy()
    total = 0.0
    for t in range(mdp.horizon):
        sa = d[:, None] * probs
        total += mdp.gamma ** t * float(np.sum(sa * mdp.reward))
        d = np.einsum("sa,sap->p", sa, mdp.transition)
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def corridor():
    return corridor_mdp()


# acceptance criteria register one line each; printed in the terminal summary
ACCEPTANCE_LINES = []


def report_criterion(number, title, passed, detail):
    line = f"criterion {number} {'PASS' if passed else 'FAIL'}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
