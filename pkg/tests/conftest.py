import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

from patdist import compile_pattern, embed, make_order_m, uniform_iid  # noqa: E402


def toy_chain(pattern, alphabet="ABCD", model=None):
    model = model or uniform_iid(alphabet)
    dfa = compile_pattern(pattern, alphabet)
    return embed(make_order_m(dfa, model.m), model)


@pytest.fixture(scope="session")
def adad():
    return toy_chain("ADAD")


@pytest.fixture(scope="session")
def ad2():
    return toy_chain("AD(A|D){2}AD")


ACCEPTANCE: dict = {}


def record(criterion: int, ok: bool, detail: str = ""):
    """Collect acceptance outcomes; a criterion passes only if every check recorded for it passed."""
    prev_ok, prev_detail = ACCEPTANCE.get(criterion, (True, []))
    ACCEPTANCE[criterion] = (prev_ok and ok, prev_detail + ([detail] if detail else []))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[c]
        terminalreporter.write_line(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}  {'; '.join(detail)}")
