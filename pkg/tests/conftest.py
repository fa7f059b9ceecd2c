import numpy as np
import pytest

from mmwsched.instance import Instance, RssTensor

# acceptance results collected by tests/test_acceptance.py
ACCEPTANCE_RESULTS: dict = {}


def make_instance(s, weights=None, noise=1.0, bandwidth=1.0, threshold=0.0):
    s = np.asarray(s, dtype=float)
    if weights is None:
        weights = np.ones(s.shape[1])
    return Instance(RssTensor(s), weights, noise, bandwidth, threshold)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"ACCEPTANCE {key} {'PASS' if ok else 'FAIL'}  {detail}")
