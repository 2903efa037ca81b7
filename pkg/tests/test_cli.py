import json

from dfa_lab.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_OK, main


def write_cfg(tmp_path, text):
    path = tmp_path / "run.cfg"
    path.write_text(text)
    return path


TINY = ("experiment.algorithms = oracle-ppo, dfa\nexperiment.budget = 2000\n"
        "eval.interval = 400\neval.episodes = 5\n")


def test_verify_passes_and_writes_report(tmp_path, capsys):
    assert main(["verify", "--only", "gradient_zero_sum", "--out", str(tmp_path)]) == EXIT_OK
    report = json.loads((tmp_path / "verify.json").read_text())
    assert report["passed"] and report["checks"][0]["name"] == "gradient_zero_sum"
    assert json.loads(capsys.readouterr().out) == report


def test_verify_failure_exit_code():
    assert main(["verify", "--only", "soft_value_identity",
                 "--tolerance", "soft_value_identity=0"]) == EXIT_FAIL


def test_bad_usage_is_config_error(capsys):
    assert main(["verify", "--tolerance", "nonsense=1"]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG
    assert main(["gridworld", "--seed-list", "1,x"]) == EXIT_CONFIG


def test_gridworld_tiny_run(tmp_path, capsys):
    cfg = write_cfg(tmp_path, TINY)
    out = tmp_path / "out"
    assert main(["gridworld", "--config", str(cfg), "--out", str(out),
                 "--seed-list", "3,1"]) == EXIT_OK
    for name in ("oracle-ppo.csv", "dfa.csv", "gridworld.svg", "config.txt"):
        assert (out / name).is_file()
    assert "experiment.seeds = 3, 1" in (out / "config.txt").read_text()
    assert "mean final return" in capsys.readouterr().out
    first = (out / "gridworld.svg").read_bytes()
    assert main(["gridworld", "--config", str(cfg), "--out", str(out), "--seed-list", "3,1",
                 "--quiet"]) == EXIT_OK
    assert (out / "gridworld.svg").read_bytes() == first


def test_gridworld_config_errors(tmp_path, capsys):
    assert main(["gridworld", "--config", str(write_cfg(tmp_path, "dfa.alpah = 1\n"))]) \
        == EXIT_CONFIG
    assert "unknown key" in capsys.readouterr().err
    assert main(["gridworld", "--config", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG


def test_synth_demo_tiny(tmp_path):
    cfg = write_cfg(tmp_path, "experiment.algorithms = dfa-offpolicy, sac\n"
                              "experiment.budget = 1000\neval.interval = 500\n"
                              "eval.episodes = 5\ncritic.warmup = 100\n")
    out = tmp_path / "synth"
    assert main(["synth-demo", "--config", str(cfg), "--out", str(out), "--seed-list", "3",
                 "--quiet"]) == EXIT_OK
    assert (out / "synth-demo.svg").is_file() and (out / "sac.csv").is_file()


def test_plot_command(tmp_path):
    csv = tmp_path / "a.csv"
    csv.write_text("algorithm,seed,env_steps,avg_return\na,0,0,1.0\na,0,10,2.0\n")
    other = tmp_path / "b.csv"
    other.write_text("algorithm,seed,env_steps,avg_return\nb,0,0,1.0\nb,0,20,2.0\n")
    svg = tmp_path / "p.svg"
    assert main(["plot", str(csv), "--out", str(svg), "--title", "demo"]) == EXIT_OK
    assert svg.read_text().startswith("<svg")
    assert main(["plot", str(csv), str(other), "--out", str(svg)]) == EXIT_CONFIG
    assert main(["plot", str(tmp_path / "missing.csv"), "--out", str(svg)]) == EXIT_CONFIG
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n")
    assert main(["plot", str(bad), "--out", str(svg)]) == EXIT_CONFIG
