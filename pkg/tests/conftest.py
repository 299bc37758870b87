import random
from pathlib import Path

import pytest
from hypothesis import strategies as st

from merwbell.statespace import SiteOrdering, all_corners, build_graph

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
GOLDEN = Path(__file__).resolve().parent / "golden"

_acceptance = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark and (rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed")):
        _acceptance.append((mark.args[0], rep.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label, outcome in _acceptance:
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {label}")


@pytest.fixture
def standard_config():
    return CONFIGS / "standard.json"


@pytest.fixture
def full_cube_config():
    return CONFIGS / "full_cube.json"


def random_flip_graph(rng: random.Random, n: int):
    """Random valid flip graph: shuffled ordering, random cube edges and loops."""
    corners = all_corners(n)
    rng.shuffle(corners)
    ordering = SiteOrdering(tuple(corners))
    size = len(corners)
    edges = [
        (i, j)
        for i in range(1, size + 1)
        for j in range(i + 1, size + 1)
        if ordering.state_of_index(i).hamming(ordering.state_of_index(j)) == 1
        and rng.random() < 0.6
    ]
    loops = [i for i in range(1, size + 1) if rng.random() < 0.5]
    return build_graph(ordering, edges, loops)


@st.composite
def flip_graphs(draw, ns=(2, 3, 4)):
    n = draw(st.sampled_from(ns))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_flip_graph(random.Random(seed), n)
