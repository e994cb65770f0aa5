from __future__ import annotations

import pytest

from fkcable.alexander import alexander_cable, alexander_fig8
from fkcable.fk import compute_fk, solve_Pr_direct
from fkcable.jones import mmr_fit
from fkcable.qtorus import resolve_ahat


@pytest.fixture(scope="session")
def delta():
    return alexander_cable(2, 9, alexander_fig8())


@pytest.fixture(scope="session")
def resolution():
    return resolve_ahat(9)


@pytest.fixture(scope="session")
def fk_result():
    """Full pipeline through m = 151 with R = 24 (about half a minute)."""
    return compute_fk(9, m_max=151, R=24)


@pytest.fixture(scope="session")
def fit8():
    return mmr_fit(9, 8)


@pytest.fixture(scope="session")
def direct_P5(delta):
    """P_1..P_5 by direct matching; needs the fit through h^129."""
    fit = mmr_fit(9, 129, N=132)
    return solve_Pr_direct(fit, delta, 5)


# Acceptance criteria record their outcome here; the summary prints one line each.
ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, note = ACCEPTANCE[k]
        line = f"[{'PASS' if ok else 'FAIL'}] {k:2d}. {title}"
        terminalreporter.write_line(line + (f" ({note})" if note else ""))
