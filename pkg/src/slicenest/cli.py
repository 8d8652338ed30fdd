"""Command-line interface.

Options are grouped under chained subcommands which may appear in any order::

    slicenest --model-name bernoulli sampler --nlive 1000 --num-repeats 5 \\
        data --file bernoulli.data.json random --seed 7 output --json-file out.json

``polychord`` is accepted as an alias for ``sampler``.  Settings resolve as
explicit flag > ``--from-toml`` manifest > defaults; the chain directory
also honours ``NS_CHAIN_DIR`` (below an explicit flag, above the manifest).

Exit codes: 0 success, 1 usage error, 2 data error, 3 model contract
violation, 4 sampler stall.
"""

from __future__ import annotations

import importlib
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import click

from . import __version__
from .benchmarks import CATALOG, default_data_path
from .engine import RunConfig, resolve_seed, run
from .errors import SlicenestError
from .io import (
    CHAIN_DIR_ENV,
    RunManifest,
    feedback,
    load_data,
    read_manifest,
    write_chains,
    write_manifest,
    write_summary,
)

__all__ = ["CliInvocation", "parse_cli", "resolve", "execute", "main"]

DEFAULT_MODEL = "bernoulli"
DEFAULT_NLIVE = 500
DEFAULT_PRECISION = 1e-3
DEFAULT_CHAIN_DIR = "chains"

_ALIASES = {"polychord": "sampler"}


@dataclass(frozen=True)
class CliInvocation:
    """Raw parse result; ``None`` means the option was not given."""

    model_name: Optional[str] = None
    from_toml: Optional[str] = None
    nlive: Optional[int] = None
    num_repeats: Optional[int] = None
    precision: Optional[float] = None
    seed: Optional[int] = None
    feedback: Optional[bool] = None
    write: Optional[bool] = None
    derived: Optional[bool] = None
    data_file: Optional[str] = None
    model_seed: Optional[int] = None
    json_file: Optional[str] = None
    chain_dir: Optional[str] = None

    def explicit(self) -> dict:
        return {k: v for k, v in self.__dict__.items()
                if v is not None and k not in ("model_name", "from_toml")}


class _ChainGroup(click.Group):
    def get_command(self, ctx, name):
        return super().get_command(ctx, _ALIASES.get(name, name))

    def resolve_command(self, ctx, args):
        name, cmd, rest = super().resolve_command(ctx, args)
        return cmd.name if cmd else name, cmd, rest


def _flag(name, help_):
    return click.option(name, is_flag=True, default=None, flag_value=True, help=help_)


@click.group(cls=_ChainGroup, chain=True, invoke_without_command=True,
             context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, "--version", prog_name="slicenest",
                      message="%(prog)s %(version)s")
@click.option("--model-name", default=None,
              help=f"Benchmark name ({', '.join(CATALOG)}) or 'module:factory'.")
@click.option("--from-toml", type=click.Path(dir_okay=False), default=None,
              help="Replay settings from a run manifest.")
def cli(model_name, from_toml):
    """Nested sampling of a model's evidence and posterior."""


@cli.command("sampler")
@click.option("--nlive", type=click.IntRange(min=2), default=None,
              help=f"Number of live points [default {DEFAULT_NLIVE}].")
@click.option("--num-repeats", type=click.IntRange(min=1), default=None,
              help="Slice steps per replacement [default 5 per dimension].")
@click.option("--precision", type=click.FloatRange(min=0, min_open=True), default=None,
              help=f"Stop when the live points could add this fraction of Z [default {DEFAULT_PRECISION}].")
@click.option("--seed", type=click.IntRange(min=0), default=None, help="Sampler seed.")
@_flag("--no-feedback", "Silence progress and the end-of-run block.")
@_flag("--no-write", "Write nothing to disk.")
@_flag("--no-derived", "Skip derived quantities.")
def sampler_cmd(nlive, num_repeats, precision, seed, no_feedback, no_write, no_derived):
    """Sampler settings (alias: polychord)."""
    return "sampler", {
        "nlive": nlive, "num_repeats": num_repeats, "precision": precision, "seed": seed,
        "feedback": False if no_feedback else None,
        "write": False if no_write else None,
        "derived": False if no_derived else None,
    }


@cli.command("data")
@click.option("--file", "data_file", type=click.Path(dir_okay=False), default=None,
              help="JSON data file.")
def data_cmd(data_file):
    """Dataset."""
    return "data", {"data_file": data_file}


@cli.command("random")
@click.option("--seed", type=click.IntRange(min=0), default=None,
              help="Seed for the model's own random numbers (derived quantities).")
def random_cmd(seed):
    """Model random-number generation."""
    return "random", {"model_seed": seed}


@cli.command("output")
@click.option("--json-file", type=click.Path(dir_okay=False), default=None,
              help="Summary file [default <model>.json].")
@click.option("--chain-dir", type=click.Path(file_okay=False), default=None,
              help=f"Chain directory [default ${CHAIN_DIR_ENV} or {DEFAULT_CHAIN_DIR}].")
def output_cmd(json_file, chain_dir):
    """Output locations."""
    return "output", {"json_file": json_file, "chain_dir": chain_dir}


@cli.result_callback()
def _collect(results, model_name, from_toml):
    seen = set()
    values = {}
    for group, opts in results:
        if group in seen:
            raise click.UsageError(f"subcommand '{group}' given more than once")
        seen.add(group)
        values.update({k: v for k, v in opts.items() if v is not None})
    return CliInvocation(model_name=model_name, from_toml=from_toml, **values)


_VALUE_OPTS = {"--model-name", "--from-toml", "--nlive", "--num-repeats", "--precision",
               "--seed", "--file", "--json-file", "--chain-dir"}


def _check_repeated_options(argv) -> None:
    """Reject an option repeated within one group (click would keep the last)."""
    group, seen = "", set()
    expect_value = False
    for tok in argv:
        if expect_value:
            expect_value = False
            continue
        if tok == "--":
            break
        if not tok.startswith("-"):
            name = _ALIASES.get(tok, tok)
            if name in cli.commands:
                group, seen = name, set()
            continue
        opt = tok.split("=", 1)[0]
        if (group, opt) in seen:
            where = f"'{group}'" if group else "the top level"
            raise click.UsageError(f"option {opt} repeated in {where}")
        seen.add((group, opt))
        expect_value = opt in _VALUE_OPTS and "=" not in tok


def parse_cli(argv) -> CliInvocation:
    """Parse arguments into a :class:`CliInvocation`.

    Raises ``click.UsageError`` on bad input.  ``--version`` and ``--help``
    print and return their exit code (an ``int``) instead.
    """
    argv = list(argv)
    _check_repeated_options(argv)
    return cli.main(args=argv, prog_name="slicenest", standalone_mode=False)


def load_model(name: str, data_file: Optional[str]):
    """Build a model from the catalogue or a ``module:factory`` reference.

    Returns ``(model, resolved data path or None)``.
    """
    entry = CATALOG.get(name)
    if entry is not None:
        path = data_file or default_data_path(name)
        if entry.needs_data:
            return entry.factory(load_data(path, entry.schema)), str(Path(path).resolve())
        return entry.factory(), None
    if ":" not in name:
        raise click.UsageError(
            f"unknown model {name!r}; choose from {', '.join(CATALOG)} or give 'module:factory'")
    mod, attr = name.split(":", 1)
    try:
        factory = getattr(importlib.import_module(mod), attr)
    except (ImportError, AttributeError) as exc:
        raise click.UsageError(f"cannot import model {name!r}: {exc}") from None
    if data_file:
        return factory(load_data(data_file)), str(Path(data_file).resolve())
    return factory(), None


def resolve(inv: CliInvocation, dim: int, model_name: str, data_file: Optional[str],
            base: Optional[RunManifest] = None, env=None) -> RunManifest:
    """Fill every setting: explicit > manifest > defaults (chain dir: explicit >
    ``NS_CHAIN_DIR`` > manifest > default)."""
    env = os.environ if env is None else env
    given = inv.explicit()

    def pick(key, default):
        if key in given:
            return given[key]
        if base is not None:
            return getattr(base, key)
        return default() if callable(default) else default

    chain_dir = given.get("chain_dir") or env.get(CHAIN_DIR_ENV) or (
        base.chain_dir if base is not None else DEFAULT_CHAIN_DIR)
    overridden = tuple(sorted(k for k in given if base is not None
                              and given[k] != getattr(base, k)))
    return RunManifest(
        model=model_name,
        nlive=pick("nlive", DEFAULT_NLIVE),
        num_repeats=pick("num_repeats", 5 * dim),
        precision=pick("precision", DEFAULT_PRECISION),
        seed=pick("seed", lambda: resolve_seed(None)),
        model_seed=pick("model_seed", lambda: resolve_seed(None)),
        feedback=pick("feedback", True),
        write=pick("write", True),
        derived=pick("derived", True),
        data_file=data_file,
        json_file=pick("json_file", f"{model_name}.json"),
        chain_dir=chain_dir,
        from_toml=str(inv.from_toml) if inv.from_toml else None,
        overridden=overridden,
    )


def execute(inv: CliInvocation, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    base = read_manifest(inv.from_toml) if inv.from_toml else None
    model_name = inv.model_name or (base.model if base else DEFAULT_MODEL)
    data_arg = inv.data_file or (base.data_file if base else None)
    model, data_file = load_model(model_name, data_arg)
    manifest = resolve(inv, model.dim, model_name, data_file, base)

    config = RunConfig(n_live=manifest.nlive, n_repeat=manifest.num_repeats,
                       precision=manifest.precision, seed=manifest.seed,
                       model_seed=manifest.model_seed, feedback=manifest.feedback,
                       derived=manifest.derived)
    result = run(model, config, progress=stderr)

    paths = {}
    if manifest.write:
        chains = write_chains(result, manifest.chain_dir, model_name)
        write_manifest(manifest, manifest.toml_file)
        write_summary(result, manifest, manifest.json_file)
        paths = {"Dead points": chains["dead"], "Posterior samples": chains["equal_weights"],
                 "Summary": manifest.json_file, "Manifest": manifest.toml_file}
    feedback(stdout, result, manifest, enabled=manifest.feedback, paths=paths)
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        inv = parse_cli(argv)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.exceptions.Abort:
        return 1
    if isinstance(inv, int):
        return inv
    try:
        return execute(inv)
    except click.ClickException as exc:
        exc.show()
        return 1
    except SlicenestError as exc:
        print(f"slicenest: error: {exc}", file=sys.stderr)
        return exc.exit_code
