import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from weiltrace.places import build_lattice, compute_place_set  # noqa: E402
from weiltrace.testfn import autocorrelate, make_bump, project_vanishing_moment  # noqa: E402


def bump_tuples(g):
    return [(b.center, b.half_width, b.amplitude) for b in g.bumps]


@pytest.fixture(scope="session")
def g03():
    """Single bump with no finite places (mu = e^-0.6)."""
    return make_bump(0.0, 0.3)


@pytest.fixture(scope="session")
def h03(g03):
    return autocorrelate(g03)


@pytest.fixture(scope="session")
def gp03(g03):
    return project_vanishing_moment(g03)


@pytest.fixture(scope="session")
def hp03(gp03):
    return autocorrelate(gp03)


@pytest.fixture(scope="session")
def gp04():
    """Moment-projected bump with S' = {2} (mu = e^-0.8)."""
    return project_vanishing_moment(make_bump(0.0, 0.4))


@pytest.fixture(scope="session")
def hp04(gp04):
    return autocorrelate(gp04)


@pytest.fixture(scope="session")
def lattice04(hp04):
    return build_lattice(compute_place_set(hp04.mu), False, 64)


@pytest.fixture(scope="session")
def lattice_empty():
    return build_lattice(compute_place_set(0.6), False, 64)


@pytest.fixture(scope="session")
def zero_h():
    from weiltrace.testfn import TestFunction

    return autocorrelate(TestFunction(()))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
