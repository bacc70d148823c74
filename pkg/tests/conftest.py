from __future__ import annotations

import pytest

from diskmdp.corpus import MODELS
from diskmdp.explore import ExplorationConfig, explore
from diskmdp.lang import load_model, select_property

ACCEPTANCE_LINES: list[str] = []

COIN = """\
var c : 0..2 init 0;
[] c=0 -> 0.5 : (c'=1) + 0.5 : (c'=2);
property p_heads = Pmax=? [F c=2];
partition c + 1 bound 3;
"""


def corpus_model(name: str, small: bool = True):
    entry = MODELS[name]
    return load_model(entry.text(), entry.small if small and entry.small else None)


@pytest.fixture
def coin():
    return load_model(COIN)


@pytest.fixture
def explored(tmp_path):
    """Explore a model into a fresh workdir; returns (report, workdir)."""
    counter = iter(range(1000))

    def run(model, prop=None, part=None, compress=False):
        wd = tmp_path / f"w{next(counter)}"
        if isinstance(prop, str) or prop is None:
            prop = select_property(model, prop) if model.properties or prop else None
        rep = explore(model, part, prop, ExplorationConfig(wd, compress))
        return rep, wd

    return run


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
