import numpy as np
import pytest
from hypothesis import settings

from fluxlim import _kernels as K

settings.register_profile("fluxlim", max_examples=30, deadline=None)
settings.load_profile("fluxlim")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=K.available_backends())
def backend(request):
    prev = K.set_backend(request.param)
    yield request.param
    K.set_backend(prev)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
