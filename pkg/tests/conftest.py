import numpy as np
import pytest
from hypothesis import settings

from polyreach.poly import ParamPoly

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def random_poly(rng, n, m, max_deg, n_terms=None):
    terms = {}
    for _ in range(n_terms or int(rng.integers(1, 8))):
        ex = tuple(int(v) for v in rng.integers(0, max_deg + 1, size=n))
        terms[ex] = rng.normal(size=m + 1)
    return ParamPoly(n, m, terms)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}")
