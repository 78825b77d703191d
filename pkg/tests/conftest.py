import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mtsurf.catalog import degenerate_graph_surface, flat_homogeneous_torus  # noqa: E402
from mtsurf.chart import build_positively_oriented_normal_frame, sample_analytic_surface  # noqa: E402
from mtsurf.fields import GridSpec  # noqa: E402

TWO_PI = 2 * np.pi
DEGENERATE_GRID = dict(origin=(0.0, -1.5), extent=(TWO_PI, 3.0), periodic=(True, False))


def torus_jet(h, n=32):
    grid = GridSpec((n, n))
    return build_positively_oriented_normal_frame(sample_analytic_surface(flat_homogeneous_torus(h), grid))


def degenerate_jet(profile=None, n=32):
    surf = degenerate_graph_surface(profile or {"kind": "sine", "amplitude": 0.2})
    grid = GridSpec((n, n), **DEGENERATE_GRID)
    return build_positively_oriented_normal_frame(sample_analytic_surface(surf, grid))


_cache = {}


def cached(key, make):
    if key not in _cache:
        _cache[key] = make()
    return _cache[key]


@pytest.fixture
def torus1():
    return cached(("torus", 1.0, 32), lambda: torus_jet(1.0))


@pytest.fixture
def torus0():
    return cached(("torus", 0.0, 32), lambda: torus_jet(0.0))


@pytest.fixture
def degenerate():
    return cached(("degenerate", 32), lambda: degenerate_jet())


ACCEPTANCE = {}


def record(number, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
