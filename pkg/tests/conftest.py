import numpy as np
import pytest
from hypothesis import settings

from stretchshock.material import NondimensionalParams
from stretchshock.profiles import make_constant_stretch_data

settings.register_profile("default", max_examples=25, deadline=None)
settings.load_profile("default")


@pytest.fixture
def prm0():
    return NondimensionalParams.simple(2.0, 1.0, 0.0)


@pytest.fixture
def prm1():
    return NondimensionalParams.simple(2.0, 1.0, 1.0)


@pytest.fixture
def flat0(prm0):
    """Unperturbed constant-stretch data, zeta = 0."""
    return make_constant_stretch_data(prm0, 1.0, 2.0)


@pytest.fixture
def flat1(prm1):
    return make_constant_stretch_data(prm1, 1.0, 2.0)


def fd_deriv(f, x, h=1e-4):
    """Fourth-order central difference, used as an independent derivative oracle."""
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


# one summary line per acceptance criterion, printed at the end of the session
_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS] = []


@pytest.fixture
def verdict(request):
    lines = request.config.stash[_VERDICTS]

    def record(label, passed, detail):
        line = f"criterion {label}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
