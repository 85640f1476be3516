import numpy as np
import pytest

from vortexflow import fields as fl
from vortexflow.grid import make_grid


@pytest.fixture
def rect16():
    return make_grid("rectangle", 16)


@pytest.fixture
def torus16():
    return make_grid("torus", 16)


def smooth_rect_state(n_cells=16, tau=1.0):
    g = make_grid("rectangle", n_cells)
    u = fl.polynomial_section(g, [(0.3, 0.4), (0.7, 0.55)], 2.0) + 0.1j * np.sin(np.pi * g.x)
    return fl.State(g, 0.3 * np.sin(np.pi * g.y) * g.x, 0.2 * np.cos(np.pi * g.x), u, tau=tau)


def smooth_torus_state(n_cells=16, degree=0, lx=1.0):
    g = make_grid("torus", n_cells, lx=lx)
    tp = 2 * np.pi / lx
    if degree:
        u = fl.theta_section(g, degree, 0.9)
    else:
        u = 0.8 + 0.3 * np.exp(1j * tp * g.x) + 0.2j * np.sin(tp * g.y)
    return fl.State(g, 0.2 * np.sin(tp * g.y), 0.3 * np.cos(tp * g.x), u, degree=degree)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
