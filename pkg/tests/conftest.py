import warnings
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from lpkernel import SpaceDescriptor, family_from_rows

warnings.filterwarnings("ignore", message=".*TBB.*")

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def rationals(max_num=8, max_den=8, nonzero=True):
    nums = st.integers(-max_num, max_num)
    if nonzero:
        nums = nums.filter(lambda v: v != 0)
    return st.builds(Fraction, nums, st.integers(1, max_den))


@st.composite
def families(draw, max_universe=8, max_vectors=8, max_support=4, space=None, allow_zero_rows=False):
    """Random small oracle-mode families in an l_p model (p from {1, 3/2, 2, 3}) or c0."""
    if space is None:
        u = draw(st.integers(1, max_universe))
        kind = draw(st.sampled_from(["1", "3/2", "2", "3", "c0"]))
        space = SpaceDescriptor.c0(range(u)) if kind == "c0" else SpaceDescriptor.lp(Fraction(kind), range(u))
    u = space.size
    n = draw(st.integers(0, max_vectors))
    rows = []
    for _ in range(n):
        lo = 0 if allow_zero_rows else 1
        pos = draw(st.sets(st.integers(0, u - 1), min_size=lo, max_size=min(max_support, u)))
        rows.append({p: draw(rationals()) for p in sorted(pos)})
    return family_from_rows(space, rows)


@pytest.fixture
def l2_3():
    return SpaceDescriptor.lp(2, range(3))


@pytest.fixture
def abc():
    return SpaceDescriptor.lp(2, ("a", "b", "c"))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line; the line is written even if the test fails."""

    def record(number: int, title: str, ok: bool, detail: str):
        line = f"CRITERION {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
