from pathlib import Path

import numpy as np
import pytest

from elruhna.hypercore import Hypergraph, two_core
from elruhna.perturb import random_hypergraph

DATA = Path(__file__).resolve().parents[1] / "src" / "elruhna" / "data"

# 8 vertices, hyperedge sizes 2-4, pairwise distinct (degree, incident sizes) profiles
RIGID8 = Hypergraph(8, ((0, 2, 5, 7), (1, 2, 3, 5), (3, 4, 6), (1, 6), (0, 1, 5, 6), (4, 7), (2, 4, 6)))


@pytest.fixture
def rigid8():
    return RIGID8


@pytest.fixture(scope="session")
def lesmis_path():
    return DATA / "lesmis.hg"


def tiny_instances(count, seed, n_max=6, m_max=5):
    """Random small simple hypergraphs (no repeated hyperedge)."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = int(rng.integers(2, n_max + 1))
        m = int(rng.integers(1, m_max + 1))
        H = random_hypergraph(n, m, 2.0, rng, min_size=1)
        out.append(Hypergraph(n, tuple(dict.fromkeys(H.edges))))
    return out


def random_core(n, m, lam, seed):
    rng = np.random.default_rng(seed)
    while True:
        core, _, _ = two_core(random_hypergraph(n, m, lam, rng))
        if core.m:
            return core


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
