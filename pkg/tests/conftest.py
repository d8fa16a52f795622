import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from jsrkit.family import MatrixFamily

settings.register_profile(
    "jsrkit",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("jsrkit")


def random_family(rng, n, m, complex_=False, low=-1.0, high=1.0):
    mats = rng.uniform(low, high, size=(m, n, n))
    if complex_:
        mats = mats + 1j * rng.uniform(low, high, size=(m, n, n))
    return MatrixFamily(tuple(mats))


@st.composite
def families(draw, max_n=3, max_m=3, complex_=None):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    cplx = draw(st.booleans()) if complex_ is None else complex_
    return random_family(np.random.default_rng(seed), n, m, cplx)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


PHI = (1 + 5**0.5) / 2


# acceptance criteria append (number, title, passed, detail) here; echoed in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {num:>2}  {title}  [{detail}]")
