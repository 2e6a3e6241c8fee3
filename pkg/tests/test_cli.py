import filecmp
import os

import pytest

from adaptdiff import cli


def _run(*args):
    return cli.main(list(args))


def test_missing_config_leaves_no_artifacts(tmp_path):
    out = tmp_path / "out"
    code = _run("fixation", "--config", str(tmp_path / "nope.yaml"), "--out", str(out))
    assert code == cli.EXIT_USAGE
    assert not out.exists()


def test_bad_config_is_usage_error(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("solver: {tol: 1e-10, bogus: 1}\n")
    assert _run("fixation", "--config", str(p), "--out", str(tmp_path / "o")) == cli.EXIT_USAGE
    assert _run("nonexistent") == cli.EXIT_USAGE


@pytest.mark.parametrize("command,files", [
    ("fixation", ["fixation.csv"]),
    ("invasibility", ["invasibility.csv", "slopes.csv"]),
    ("tss", ["tss_paths.csv"]),
    ("diffusion", ["diffusion_paths.csv", "diffusion_summary.csv", "biased_ode.csv"]),
    ("simulate-micro", ["micro_events.csv", "micro_samples.csv", "first_substitutions.csv"]),
])
def test_subcommands_are_deterministic(tmp_path, command, files):
    extra = ["--override", "run.horizon=5.0", "--override", "tss.paths=3",
             "--override", "simulate_micro.horizon=200.0",
             "--override", "simulate_micro.first_substitution_replicates=20"]
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(command, "--seed", "5", "--out", str(a), *extra) == 0
    assert _run(command, "--seed", "5", "--out", str(b), "--jobs", "2", *extra) == 0
    for f in files:
        assert filecmp.cmp(a / f, b / f, shallow=False), f
    assert (a / "report.txt").exists()


def test_numeric_abort_exit_code(tmp_path):
    code = _run("diffusion", "--out", str(tmp_path / "o"), "--override", "run.initial_trait=[-20.0]")
    assert code == cli.EXIT_NUMERIC


def test_quick_validate(tmp_path):
    small = ["validation.genealogy.replicates=2000", "validation.genealogy.plateau_n=60",
             "validation.rare_mutation.micro_replicates=100",
             "validation.rare_mutation.tss_replicates=1000",
             "validation.small_steps.paths=500", "validation.small_steps.x_points=9",
             "validation.small_steps.delta_points=9", "validation.stationary.samples=2000",
             "validation.scaling.replicates=100", "validation.scaling.gradient_max_size=20",
             "validation.analytic.neutral_n_max=120", "validation.analytic.k_max=2000",
             "scale.gamma=[0.1, 0.05]"]
    args = ["validate", "--out", str(tmp_path)]
    for s in small:
        args += ["--override", s]
    code = _run(*args)
    assert code in (cli.EXIT_OK, cli.EXIT_VALIDATION)
    lines = (tmp_path / "checks.csv").read_text().splitlines()
    rows = [l for l in lines if not l.startswith("#")][1:]
    assert len(rows) >= 25
    assert {int(r.split(",")[0]) for r in rows} == set(range(1, 13))
    assert os.path.exists(tmp_path / "report.txt")
