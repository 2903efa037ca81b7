"""
Verification suite, a small experiment and its learning-curve chart
===================================================================

The same steps as ``dfa-lab verify`` and ``dfa-lab gridworld`` with a small
budget, driven from Python.
"""

from pathlib import Path

from dfa_lab.harness.config import ExperimentConfig
from dfa_lab.harness.experiment import run_experiment
from dfa_lab.harness.plot import plot_curves
from dfa_lab.harness.verify import verify_suite

report = verify_suite()
for check in report.checks:
    print(f"{check.name:<24} {'ok' if check.passed else 'FAIL'}  residual {check.residual:.1e}")

out = Path("demo_results")
config = ExperimentConfig(algorithms=("dfa", "oracle-ppo"), seeds=(3, 1, 14),
                          budget=200_000, eval_interval=20_000)
results = run_experiment(config, out)
for name, records in results.items():
    print(name, [round(r.final_return, 2) for r in records])
print("chart written to", plot_curves([out / f"{n}.csv" for n in results],
                                      out / "curves.svg", "DFA vs Oracle-PPO"))
