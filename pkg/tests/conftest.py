import contextlib
import time

import pytest

from rotorbit.group import standard_group
from rotorbit.zoo import build_map, two_way_shears

CHAIN = ["a1", "b1", "a1 a2", "b2", "a2"]

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def G2():
    return standard_group(2)


@pytest.fixture(scope="session")
def chain_map(G2):
    """Two-way shears along the 5-chain; width 0.15, offset 0.2."""
    return build_map(two_way_shears(CHAIN, G2, width=0.15, side_offset=0.2), G2, certify=False)


class Criterion:
    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.details = []
        self.ok = True

    def check(self, ok, detail):
        self.details.append(detail)
        self.ok = self.ok and bool(ok)
        return bool(ok)

    def note(self, detail):
        """Informational detail that does not affect the verdict."""
        self.details.append(detail)


@contextlib.contextmanager
def criterion(number, title):
    """Collect the checks of one acceptance criterion and record a summary line,
    failing on the first check that misses."""
    c = Criterion(number, title)
    t0 = time.perf_counter()
    try:
        yield c
    except BaseException as e:
        c.ok = False
        c.details.append(f"error: {type(e).__name__}: {e}")
        raise
    finally:
        secs = time.perf_counter() - t0
        status = "PASS" if c.ok else "FAIL"
        ACCEPTANCE[number] = f"criterion {number} {status} [{secs:.1f} s] {title}: " + "; ".join(c.details)
    if not c.ok:
        pytest.fail(ACCEPTANCE[number])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
