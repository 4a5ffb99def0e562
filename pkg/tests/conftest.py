from types import SimpleNamespace

import numpy as np
import pytest

from uavsec.channel import A2GParams, G2GParams


def make_scenario(m=4, n=2, gbs_users=(0, 1), ar_users=(2, 3), eves=((60.0, 5.0, 0.0),), **kw):
    users = kw.pop("users", [[30.0, 0.0, 0.0], [35.0, 8.0, 0.0], [120.0, -5.0, 0.0], [125.0, 6.0, 0.0]])
    base = dict(
        gbs_position=np.array([0.0, 0.0, 20.0]), uav_start=np.array([80.0, 0.0, 60.0]),
        bounds=np.array([[0.0, 200.0], [-50.0, 50.0], [30.0, 120.0]]),
        users=np.asarray(users, dtype=float), eves=np.asarray(eves, dtype=float).reshape(-1, 3),
        m_antennas=m, n_antennas=n, a2g=A2GParams(), g2g=G2GParams(),
        p_b_max=1e10, p_r_max=1e9, lambda_r_max=10.0, horizon=5, seed=1,
        gbs_users=np.asarray(gbs_users, dtype=int), ar_users=np.asarray(ar_users, dtype=int),
    )
    base.update(kw)
    return SimpleNamespace(**base)


@pytest.fixture
def scenario():
    return make_scenario()


ACCEPTANCE: dict[int, str] = {}


def record(number: int, passed: bool, title: str, detail: str) -> bool:
    """Keep one verdict line per acceptance criterion for the terminal summary."""
    line = f"{'PASS' if passed else 'FAIL'}  criterion {number:2d}  {title}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
