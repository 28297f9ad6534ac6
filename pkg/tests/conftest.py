import hypothesis
import pytest

from minimax_egm import make_quadratic, make_quartic


hypothesis.settings.register_profile("default", max_examples=50, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile("default")


@pytest.fixture
def bilinear():
    return make_quadratic(0.0, 1.0, 1)


@pytest.fixture
def quad_small_rho():
    return make_quadratic(0.1, 10.0, 1)


@pytest.fixture
def quad_rho1():
    return make_quadratic(1.0, 10.0, 1)


@pytest.fixture
def quartic():
    return make_quartic(100.0)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
