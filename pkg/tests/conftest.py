import numpy as np
import pytest
from hypothesis import settings

from hdsqm import _kernels_py

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def _compiled():
    try:
        from hdsqm import _kernels
        return _kernels
    except ImportError:
        return None


BACKENDS = {"python": _kernels_py, "cython": _compiled()}


@pytest.fixture(params=["python", "cython"])
def kernel(request):
    mod = BACKENDS[request.param]
    if mod is None:
        pytest.skip("compiled kernels not built")
    return mod


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number, title, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}" + (f"  [{detail}]" if detail else "")
        ACCEPTANCE_LINES.append((number, line))
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
