import numpy as np
import pytest

from conftest import occupancy_return
from dfa_lab.harness.config import (CONFIG_KEYS, ConfigError, ExperimentConfig, format_config,
                                    load_config, parse_config)
from dfa_lab.harness.evaluation import EvalSchedule, evaluate_policy
from dfa_lab.harness.experiment import check_config, run_experiment, run_single
from dfa_lab.harness.plot import (Z90, StepGridError, curve_stats, load_curves, plot_curves,
                                  render_svg)
from dfa_lab.harness.records import CSV_HEADER, RunRecord, read_csv, records_to_csv, write_csv
from dfa_lab.harness.verify import (CHECK_NAMES, DEFAULT_TOLERANCES, check_gibbs_recovery,
                                    verify_suite)
from dfa_lab.dfa import population_pref_grad
from dfa_lab.mdp import GridWorldSpec, build_gridworld, random_mdp
from dfa_lab.policy import LogitPolicy

TINY = dict(algorithms=("oracle-ppo",), seeds=(3,), budget=2000, eval_interval=400,
            eval_episodes=10)


# -- config -----------------------------------------------------------------------

def test_default_config_is_the_gridworld_protocol():
    c = ExperimentConfig()
    assert c.seeds == (3, 1, 14, 4, 50)
    assert (c.side, c.horizon, c.reverse_prob, c.panel_size) == (5, 20, 0.4, 500)
    assert c.algorithms == ("dfa", "rm-ppo-1", "rm-ppo-2", "oracle-ppo")


def test_parse_config_overrides_and_comments():
    c = parse_config("# comment\n\ndfa.alpha = 0.01  # inline\nexperiment.seeds = 1, 2\n"
                     "dfa.reweight_pairs = yes\nexperiment.algorithms = dfa\n"
                     "experiment.budget = 40_000\n")
    assert c.dfa_alpha == 0.01 and c.seeds == (1, 2) and c.dfa_reweight_pairs
    assert c.budget == 40_000


@pytest.mark.parametrize("text", ["dfa.alpah = 1", "dfa.alpha", "experiment.seeds = a",
                                  "experiment.seeds =", "experiment.algorithms = dqn",
                                  "eval.episodes = 0", "dfa.reweight_pairs = maybe"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_format_parse_round_trip(tmp_path):
    c = ExperimentConfig(dfa_alpha=1e-8, seeds=(7, 8), alpha_sweep=(0.5, 1e-3),
                         dfa_reweight_pairs=True)
    path = tmp_path / "c.txt"
    path.write_text(format_config(c))
    assert load_config(path) == c
    assert len(format_config(c).splitlines()) == len(CONFIG_KEYS)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.txt")


def test_check_config_budget_divisibility():
    with pytest.raises(ConfigError):
        check_config(ExperimentConfig(algorithms=("dfa",), budget=1010))
    with pytest.raises(ConfigError):
        check_config(ExperimentConfig(algorithms=("dfa",), dfa_optimizer="lbfgs"))
    assert check_config(ExperimentConfig(algorithms=("dfa-alpha-sweep",))) == [
        "dfa-alpha-1", "dfa-alpha-0.001", "dfa-alpha-1e-08"]


# -- records ----------------------------------------------------------------------

def test_run_record_steps_strictly_increase():
    r = RunRecord("x", 0)
    r.append(0, 1.0)
    with pytest.raises(ValueError):
        r.append(0, 2.0)


def test_csv_schema_and_sorting(tmp_path):
    a, b = RunRecord("alg", 5), RunRecord("alg", 2)
    for rec in (a, b):
        rec.append(0, 0.5)
        rec.append(10, 1.25)
    text = records_to_csv([a, b])
    lines = text.split("\n")
    assert lines[0] == ",".join(CSV_HEADER)
    assert lines[1:5] == ["alg,2,0,0.5", "alg,2,10,1.25", "alg,5,0,0.5", "alg,5,10,1.25"]
    assert text.endswith("\n") and "\r" not in text
    path = write_csv([a, b], tmp_path / "x.csv")
    assert path.read_bytes() == text.encode()
    back = sorted(read_csv(path), key=lambda r: r.seed)
    assert [r.points for r in back] == [b.points, a.points]


def test_read_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n")
    with pytest.raises(ValueError):
        read_csv(path)


# -- evaluation -------------------------------------------------------------------

def test_deterministic_mdp_and_policy_have_exact_return():
    mdp = random_mdp(np.random.default_rng(0), 3, 2, gamma=1.0, horizon=5, deterministic=True)
    mdp = type(mdp)(mdp.transition, mdp.reward, 1.0, 5, np.eye(3)[1])
    logits = np.array([[9e1, 0.0], [0.0, 9e1], [9e1, 0.0]])
    probs = LogitPolicy(logits).probs()
    exact = occupancy_return(mdp, probs)
    assert evaluate_policy(mdp, LogitPolicy(logits), 7, 0) == pytest.approx(exact, abs=1e-12)


def test_uniform_gridworld_matches_occupancy_dp():
    mdp = build_gridworld(GridWorldSpec())
    n = 20_000
    from dfa_lab.mdp import batch_returns
    g = batch_returns(mdp, np.full((25, 4), 0.25), np.random.default_rng(1), n)
    value = evaluate_policy(mdp, LogitPolicy.uniform(25, 4), n, 1)
    assert value == pytest.approx(g.mean())
    exact = occupancy_return(mdp, np.full((25, 4), 0.25))
    assert abs(value - exact) < 3 * g.std(ddof=1) / np.sqrt(n)


def test_evaluation_seed_determinism_and_validation():
    mdp = build_gridworld(GridWorldSpec())
    pol = LogitPolicy(np.random.default_rng(2).normal(size=(25, 4)))
    assert evaluate_policy(mdp, pol, 50, 9) == evaluate_policy(mdp, pol, 50, 9)
    with pytest.raises(ValueError):
        evaluate_policy(mdp, pol, 0, 9)


def test_eval_schedule_labels_multiples_of_interval():
    mdp = build_gridworld(GridWorldSpec())
    rec = RunRecord("x", 0)
    sched = EvalSchedule(mdp, rec, 100, 2, np.random.default_rng(0))
    pol = LogitPolicy.uniform(25, 4)
    for steps in (0, 40, 80, 120, 360):
        sched.update(steps, pol)
    assert rec.steps == [0, 100, 200, 300]


# -- plot -------------------------------------------------------------------------

def make_record(alg, seed, steps, values):
    r = RunRecord(alg, seed)
    for s, v in zip(steps, values):
        r.append(s, v)
    return r


def test_curve_stats_examples():
    single = curve_stats([make_record("a", 0, [0, 1], [3.0, 4.0])])
    np.testing.assert_array_equal(single.half_width, 0.0)
    const = curve_stats([make_record("a", s, [0, 1, 2], [2.5] * 3) for s in range(3)])
    np.testing.assert_array_equal(const.mean, 2.5)
    np.testing.assert_array_equal(const.half_width, 0.0)
    pair = curve_stats([make_record("a", 0, [0], [0.0]), make_record("a", 2, [0], [2.0])])
    assert pair.mean[0] == 1.0
    assert pair.half_width[0] == pytest.approx(Z90 * np.sqrt(2) / np.sqrt(2))


def test_hand_built_csv_band(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("algorithm,seed,env_steps,avg_return\nh,0,0,0.0\nh,2,0,2.0\n")
    (curve,) = load_curves([path])
    assert curve.half_width[0] == pytest.approx(1.645)


def test_mismatched_grids_name_the_files(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv([make_record("a", 0, [0, 10], [1.0, 2.0])], a)
    write_csv([make_record("b", 0, [0, 20], [1.0, 2.0])], b)
    with pytest.raises(StepGridError, match="b.csv"):
        plot_curves([a, b], tmp_path / "x.svg")


def test_svg_is_deterministic_and_self_contained(tmp_path):
    recs = [make_record("dfa", s, [0, 100, 200], [0.0, s * 0.5, 1.0 + s]) for s in range(3)]
    path = tmp_path / "dfa.csv"
    write_csv(recs, path)
    out1 = plot_curves([path], tmp_path / "one.svg", "t").read_bytes()
    out2 = plot_curves([path], tmp_path / "two.svg", "t").read_bytes()
    assert out1 == out2
    text = out1.decode()
    assert text.startswith("<svg") and "http" not in text.replace(
        'xmlns="http://www.w3.org/2000/svg"', "")
    assert "env steps" in text and "average return" in text and ">dfa<" in text
    assert "-0<" not in text


def test_single_seed_band_collapses():
    c = curve_stats([make_record("a", 0, [0, 5], [1.0, 2.0])])
    svg = render_svg([c])
    poly = svg.split('<polygon points="')[1].split('"')[0].split()
    upper, lower = poly[:2], poly[2:][::-1]
    assert upper == lower


# -- experiment -------------------------------------------------------------------

def test_tiny_oracle_run_schema(tmp_path):
    results = run_experiment(ExperimentConfig(**TINY), tmp_path)
    (rec,) = results["oracle-ppo"]
    assert rec.steps == [0, 400, 800, 1200, 1600, 2000]
    lines = (tmp_path / "oracle-ppo.csv").read_text().splitlines()
    assert lines[0] == "algorithm,seed,env_steps,avg_return"
    assert len(lines) == 7


def test_experiment_is_byte_deterministic(tmp_path):
    cfg = ExperimentConfig(**{**TINY, "algorithms": ("dfa", "rm-ppo-1", "oracle-ppo"),
                              "seeds": (3, 1), "budget": 4000, "rm_pretrain_steps_1": 2000,
                              "rm_ppo_iterations": 10, "rm_epochs": 20})
    run_experiment(cfg, tmp_path / "a")
    run_experiment(cfg, tmp_path / "b")
    for name in ("dfa", "rm-ppo-1", "oracle-ppo"):
        assert (tmp_path / "a" / f"{name}.csv").read_bytes() == \
            (tmp_path / "b" / f"{name}.csv").read_bytes()


def test_unknown_algorithm_fails_before_any_run(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig(algorithms=("oracle-ppo", "zpg"))
    cfg = ExperimentConfig(**TINY)
    with pytest.raises(ConfigError):
        run_single(cfg, "zpg", 3)
    bad = ExperimentConfig(**{**TINY, "algorithms": ("oracle-ppo", "dfa"), "budget": 2020})
    with pytest.raises(ConfigError):
        run_experiment(bad, tmp_path)
    assert not (tmp_path / "oracle-ppo.csv").exists()


# -- verification suite -------------------------------------------------------------

def test_verify_suite_passes_by_default():
    report = verify_suite()
    assert report.passed, report.to_json()
    assert [c.name for c in report.checks] == list(CHECK_NAMES)
    for c in report.checks:
        assert c.residual <= DEFAULT_TOLERANCES[c.name]


def test_corrupted_gradient_is_caught():
    def doubled(l, p, a):
        return 2.0 * population_pref_grad(l, p, a)

    report = verify_suite(only=["gradient_fd"], gradient_fn=doubled)
    check = report["gradient_fd"]
    assert not check.passed
    assert check.residual == pytest.approx(1.0, abs=1e-3)


def test_gibbs_recovery_degenerate_beta_equals_alpha():
    worst, _ = check_gibbs_recovery(np.random.default_rng(0), n_mdps=10, alphas=(1.0,), betas=(1.0,))
    assert worst < 1e-4


def test_tolerance_override_and_failed_report():
    report = verify_suite({"soft_value_identity": 0.0}, only=["soft_value_identity"])
    assert not report.passed
    assert report.to_dict()["checks"][0]["tolerance"] == 0.0
