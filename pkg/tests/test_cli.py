import json
import subprocess
import sys
from pathlib import Path

import click
import pytest

from slicenest import cli as cli_mod
from slicenest.cli import CliInvocation, main, parse_cli, resolve
from slicenest.errors import SamplerStallError
from slicenest.io import read_manifest

TESTS = Path(__file__).parent


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.syspath_prepend(str(TESTS))
    monkeypatch.delenv("NS_CHAIN_DIR", raising=False)
    return tmp_path


class TestParse:
    def test_full_example(self):
        inv = parse_cli(["--model-name", "bernoulli", "sampler", "--nlive", "1000",
                         "--num-repeats", "5", "data", "--file", "b.json",
                         "random", "--seed", "7", "output", "--json-file", "out.json"])
        assert inv == CliInvocation(model_name="bernoulli", nlive=1000, num_repeats=5,
                                    data_file="b.json", model_seed=7, json_file="out.json")

    def test_groups_any_order(self):
        a = parse_cli(["random", "--seed", "1", "sampler", "--seed", "2"])
        b = parse_cli(["sampler", "--seed", "2", "random", "--seed", "1"])
        assert a == b and a.seed == 2 and a.model_seed == 1

    def test_alias(self):
        assert parse_cli(["polychord", "--nlive", "10"]).nlive == 10

    def test_flags(self):
        inv = parse_cli(["sampler", "--no-feedback", "--no-write", "--no-derived"])
        assert inv.feedback is False and inv.write is False and inv.derived is False
        assert parse_cli([]).explicit() == {}

    def test_version(self, capsys):
        assert parse_cli(["--version"]) == 0
        assert capsys.readouterr().out.strip().startswith("slicenest ")

    @pytest.mark.parametrize("argv", [
        ["sampler", "--nlive", "1"],
        ["sampler", "--precision", "0"],
        ["sampler", "--num-repeats", "0"],
        ["sampler", "--nlive", "ten"],
        ["warp"],
        ["sampler", "--warp"],
        ["sampler", "--nlive", "5", "sampler", "--seed", "1"],
        ["sampler", "--nlive", "5", "polychord"],
        ["sampler", "--nlive", "5", "--nlive", "6"],
        ["--model-name", "a", "--model-name", "b"],
    ])
    def test_usage_errors(self, argv):
        with pytest.raises(click.UsageError):
            parse_cli(argv)

    def test_same_option_in_different_groups_ok(self):
        assert parse_cli(["sampler", "--seed", "1", "random", "--seed", "1"]).model_seed == 1


class TestResolve:
    def test_defaults(self):
        m = resolve(CliInvocation(), 3, "eggbox", None, env={})
        assert m.nlive == 500 and m.num_repeats == 15 and m.precision == 1e-3
        assert m.chain_dir == "chains" and m.json_file == "eggbox.json" and m.overridden == ()
        assert isinstance(m.seed, int) and isinstance(m.model_seed, int)

    def test_precedence(self, tmp_path):
        base = resolve(CliInvocation(nlive=100, seed=1, model_seed=2, chain_dir="t"), 1, "m", None, env={})
        inv = CliInvocation(nlive=300, from_toml="x.toml")
        m = resolve(inv, 1, "m", None, base, env={})
        assert m.nlive == 300 and m.seed == 1 and m.model_seed == 2 and m.chain_dir == "t"
        assert m.overridden == ("nlive",) and m.from_toml == "x.toml"

    def test_chain_dir_env(self):
        base = resolve(CliInvocation(seed=1, model_seed=1, chain_dir="toml_dir"), 1, "m", None, env={})
        env = {"NS_CHAIN_DIR": "env_dir"}
        assert resolve(CliInvocation(), 1, "m", None, base, env).chain_dir == "env_dir"
        assert resolve(CliInvocation(chain_dir="flag"), 1, "m", None, base, env).chain_dir == "flag"
        assert resolve(CliInvocation(), 1, "m", None, base, {}).chain_dir == "toml_dir"


class TestMain:
    ARGS = ["sampler", "--nlive", "30", "--seed", "1", "random", "--seed", "2"]

    def test_run_writes_outputs(self, workdir, capsys):
        assert main(self.ARGS) == 0
        assert (workdir / "bernoulli.json").is_file() and (workdir / "bernoulli.toml").is_file()
        assert (workdir / "chains" / "bernoulli_dead-birth.txt").is_file()
        assert (workdir / "chains" / "bernoulli_equal_weights.txt").is_file()
        io = capsys.readouterr()
        assert "log(Z)" in io.out and "log Z" in io.err
        doc = json.loads((workdir / "bernoulli.json").read_text())
        assert doc["posterior_attrs"]["sampler"]["seed"] == 1
        m = read_manifest(workdir / "bernoulli.toml")
        assert m.nlive == 30 and m.model_seed == 2 and m.data_file.endswith("bernoulli.data.json")

    def test_no_write_no_feedback(self, workdir, capsys):
        assert main(["sampler", "--nlive", "20", "--seed", "1", "--no-write", "--no-feedback"]) == 0
        assert list(workdir.glob("*.json")) == [] and list(workdir.glob("*.toml")) == []
        assert capsys.readouterr().out == ""

    def test_env_chain_dir(self, workdir, monkeypatch):
        monkeypatch.setenv("NS_CHAIN_DIR", str(workdir / "envchains"))
        assert main(self.ARGS) == 0
        assert (workdir / "envchains" / "bernoulli_dead-birth.txt").is_file()

    def test_replay_from_toml(self, workdir, monkeypatch):
        monkeypatch.setenv("NS_FIXED_CLOCK", "fixed")
        assert main(self.ARGS + ["output", "--json-file", "a.json"]) == 0
        assert main(["--from-toml", "a.toml", "output", "--json-file", "b.json",
                     "--chain-dir", "c2"]) == 0
        a, b = json.loads((workdir / "a.json").read_text()), json.loads((workdir / "b.json").read_text())
        a["posterior_attrs"]["slicenest"]["toml file"] = b["posterior_attrs"]["slicenest"]["toml file"]
        assert a == b
        m = read_manifest(workdir / "b.toml")
        assert m.from_toml == "a.toml" and m.overridden == ("chain_dir", "json_file")

    def test_usage_exit_code(self, workdir):
        assert main(["sampler", "--nlive", "1"]) == 1
        assert main(["--model-name", "nosuchmodel"]) == 1
        assert main(["--version"]) == 0

    def test_data_error_exit_code(self, workdir):
        (workdir / "bad.json").write_text('{"N": 3}')
        assert main(["data", "--file", "bad.json"]) == 2
        assert main(["data", "--file", "missing.json"]) == 2

    def test_bad_manifest_exit_code(self, workdir):
        (workdir / "m.toml").write_text("[nope]\n")
        assert main(["--from-toml", "m.toml"]) == 1

    def test_model_error_exit_code(self, workdir):
        assert main(["--model-name", "cli_models:nan_model", "sampler", "--nlive", "5",
                     "--seed", "1", "--no-write"]) == 3

    def test_user_factory_with_data(self, workdir):
        (workdir / "d.json").write_text('{"scale": 2.0}')
        assert main(["--model-name", "cli_models:ramp", "data", "--file", "d.json",
                     "sampler", "--nlive", "20", "--seed", "1"]) == 0
        assert (workdir / "chains" / "cli_models:ramp_dead-birth.txt").is_file()
        assert read_manifest(workdir / "cli_models:ramp.toml").data_file == str(workdir / "d.json")

    def test_stall_exit_code(self, workdir, monkeypatch):
        def stall(*a, **k):
            raise SamplerStallError("no progress")

        monkeypatch.setattr(cli_mod, "run", stall)
        assert main(self.ARGS) == 4


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "slicenest", "--version"],
                         capture_output=True, text=True, check=False)
    assert out.returncode == 0 and out.stdout.startswith("slicenest ")
