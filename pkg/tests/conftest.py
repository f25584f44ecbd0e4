import pytest

from semijulia.parser import parse_poly
from semijulia.polyalg import PolyMap
from semijulia.semigroup import Semigroup


def pmap(*exprs, label=""):
    return PolyMap([parse_poly(e, len(exprs)) for e in exprs], label)


@pytest.fixture
def example1():
    return Semigroup((pmap("z1^2", "z2^2", label="f"), pmap("0.5*z1^2", "z2^2", label="g")))


@pytest.fixture
def squaring():
    return Semigroup((pmap("z1^2", "z2^2", label="f"),))


@pytest.fixture
def phi_pair():
    return Semigroup((pmap("z2", "0.25*z1 - z2^2", label="phi1"),
                      pmap("z1*z2", "z2", label="phi2")))


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)``."""
    def record(n, ok, detail=""):
        _CRITERIA.append((n, "PASS" if ok else "FAIL", detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n, verdict, detail in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {n:2d}: {verdict}  {detail}")
