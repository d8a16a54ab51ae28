import numpy as np
import pytest

from adaptomo.phantoms import FoamSpec, generate_foam, slice_phantom


@pytest.fixture(scope="session")
def small_foam():
    return generate_foam(FoamSpec(n_spheres=150, seed=11))


@pytest.fixture(scope="session")
def small_slice(small_foam):
    return slice_phantom(small_foam, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[n])
