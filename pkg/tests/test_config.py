import pytest

from adaptdiff.config import ConfigError, build_model, load_config, load_default
from adaptdiff.csvio import read_csv, write_csv


def test_default_loads_and_builds():
    cfg = load_default()
    assert cfg.data["schema_version"] == 1
    m = build_model(cfg.section("model"))
    assert m.birth([1.0]) == pytest.approx(1.1)


def test_partial_file_and_override(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("schema_version: 1\nmodel:\n  mutation: {mu: 0.3, sd: 0.2}\n")
    cfg = load_config(str(p), ["model.birth.base=2.0", "run.seed=7"])
    assert cfg.data["model"]["mutation"]["mu"] == 0.3
    assert cfg.data["model"]["birth"]["base"] == 2.0
    assert cfg.data["run"]["seed"] == 7
    assert cfg.data["model"]["competition"]["family"] == "constant"


def test_unknown_key_has_position(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("schema_version: 1\nrun:\n  sede: 3\n")
    with pytest.raises(ConfigError) as e:
        load_config(str(p))
    assert ":3:3:" in str(e.value)


def test_syntax_error_has_position(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("run:\n  seed: [1, 2\n")
    with pytest.raises(ConfigError) as e:
        load_config(str(p))
    assert str(p) in str(e.value)


def test_type_mismatch_and_version(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("run:\n  seed: abc\n")
    with pytest.raises(ConfigError):
        load_config(str(p))
    p.write_text("schema_version: 9\n")
    with pytest.raises(ConfigError):
        load_config(str(p))


def test_family_validation(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("model:\n  competition: {family: gaussian, scale: 1.0}\n")
    cfg = load_config(str(p))
    with pytest.raises(ConfigError, match="needs"):
        build_model(cfg.section("model"))
    with pytest.raises(ConfigError):
        load_config(None, ["model.nothing=1"])


def test_csv_roundtrip(tmp_path):
    p = tmp_path / "a.csv"
    x = 0.1 + 0.2
    write_csv(p, ["a", "b"], [(1, x), (2, "z")], {"seed": 3})
    meta, header, rows = read_csv(p)
    assert meta == {"seed": "3"} and header == ["a", "b"]
    assert float(rows[0][1]) == x
