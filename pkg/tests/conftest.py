"""Shared fixtures.  Expensive batches of seeded runs are cached for the
whole session so that unit and acceptance tests can share them."""

import functools
import json
from importlib import resources

import pytest

from slicenest import RunConfig, benchmarks, run

from oracles import BERNOULLI_DATA

ACCEPTANCE_LINES = []


def record_acceptance(label: str, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"{label:<4s} {'PASS' if passed else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def disaster_data():
    path = resources.files("slicenest") / "data" / "disaster.data.json"
    return json.loads(path.read_text())


@functools.lru_cache(maxsize=None)
def seeded_runs(name: str, n_runs: int, n_live: int, base_seed: int = 1000, dim=None):
    """``n_runs`` independent runs of a catalogue model with seeds
    ``base_seed + i`` (sampler) and ``base_seed + 500 + i`` (model)."""
    if name == "bernoulli":
        model = benchmarks.bernoulli(BERNOULLI_DATA)
    elif name == "disaster":
        model = benchmarks.disaster(disaster_data())
    elif dim is not None:
        model = benchmarks.CATALOG[name].factory(dim)
    else:
        model = benchmarks.CATALOG[name].factory()
    return tuple(run(model, RunConfig(n_live=n_live, seed=base_seed + i,
                                      model_seed=base_seed + 500 + i))
                 for i in range(n_runs))


@pytest.fixture(scope="session")
def bernoulli_runs():
    return seeded_runs("bernoulli", 50, 500)


@pytest.fixture
def bernoulli_model():
    return benchmarks.bernoulli(BERNOULLI_DATA)
