import dataclasses
import json

import jsonschema
import pytest

from mlshe import cli
from mlshe.errors import ConfigError, DomainError

KINDS = {"she-ensemble", "multilayer-field", "bridge-moments", "picard", "chaos-z1", "kernel-verify",
         "hciz", "holder", "positivity", "compare-symmetry", "acceptance-suite"}


def test_registry_kinds():
    assert set(cli.REGISTRY) == KINDS
    assert {e["name"] for e in cli.list_experiments()} == KINDS


@pytest.mark.parametrize("name", sorted(KINDS))
def test_packaged_config_validates(name):
    cfg = cli.load_config(name)
    assert cfg["experiment"] == name
    jsonschema.validate(cfg, cli.REGISTRY[name].schema)
    full = cli.resolve_config(name, cfg)
    assert full["workers"] >= 1 and full["strict_reduce"] is True


def test_defaults_validate():
    for e in cli.REGISTRY.values():
        jsonschema.validate(e.defaults(), e.schema)


def test_unknown_kind_suggests():
    with pytest.raises(ConfigError, match="did you mean picard"):
        cli.lookup("picrad")


def test_bad_parameter_names_path():
    with pytest.raises(ConfigError, match="invalid parameter at grid/dx"):
        cli.resolve_config("picard", {"grid": {"dx": -1.0}})
    with pytest.raises(ConfigError, match="invalid parameter"):
        cli.resolve_config("picard", {"bogus": 1})
    with pytest.raises(ConfigError, match="not 'picard'"):
        cli.resolve_config("picard", {"experiment": "hciz"})


def test_order_sensitive_kinds_refuse_loose_reduce():
    with pytest.raises(ConfigError, match="order-sensitive"):
        cli.resolve_config("picard", strict_reduce=False)
    assert cli.resolve_config("hciz", strict_reduce=False)["strict_reduce"] is False


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="neither"):
        cli.load_config("nope")
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="JSON object"):
        cli.load_config(str(bad))
    bad.write_text("{")
    with pytest.raises(ConfigError, match="cannot read"):
        cli.load_config(str(bad))


def test_kernel_verify_n2(tmp_path):
    code, summary, out = cli.run("kernel-verify", cli.load_config("kernel-verify"), n=2, out=str(tmp_path))
    assert code == 0 and summary["passed"]
    assert abs(summary["normalization_residual"]) < 1e-3
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "complete"
    assert set(man["files"]) >= {"config.json", "summary.json", "kernel.csv"}
    assert "kernel.csv" in man["columns"]


def test_rerun_byte_identical(tmp_path):
    cfg = cli.load_config("hciz")
    cli.run("hciz", cfg, out=str(tmp_path / "a"))
    cli.run("hciz", cfg, out=str(tmp_path / "b"))
    for f in ("hciz.csv", "summary.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    # config.json records the output directory, so it is the one file allowed to differ
    ma["files"].pop("config.json")
    mb["files"].pop("config.json")
    assert ma["files"] == mb["files"]


def test_failure_leaves_partial_manifest(tmp_path, monkeypatch):
    def boom(cfg, out):
        (out / "half.csv").write_text("a\n1\n")
        raise DomainError("synthetic failure")

    monkeypatch.setitem(cli.REGISTRY, "hciz", dataclasses.replace(cli.REGISTRY["hciz"], body=boom))
    assert cli.main(["hciz", "--out", str(tmp_path)]) == 1
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["status"] == "partial"
    assert man["error"] == "DomainError: synthetic failure"
    assert "half.csv" in man["files"]
    assert not (tmp_path / "summary.json").exists()


def test_main_exit_codes(tmp_path, capsys):
    assert cli.main(["picrad"]) == 2
    assert "did you mean" in capsys.readouterr().err
    assert cli.main(["run", "hciz", "--config", "hciz", "--out", str(tmp_path)]) == 0
    assert "hciz: wrote" in capsys.readouterr().out
    assert cli.main(["list"]) == 0
    assert "kernel-verify" in capsys.readouterr().out
    assert cli.main(["list", "--json"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == len(KINDS)


def test_out_env(tmp_path, monkeypatch):
    monkeypatch.setenv("MLSHE_OUT", str(tmp_path))
    assert cli.output_dir("hciz", None) == tmp_path / "hciz"
    assert cli.main(["hciz", "--config", "hciz", "--seed", "3"]) == 0
    assert json.loads((tmp_path / "hciz" / "config.json").read_text())["seeds"] == [3]
