import numpy as np
import pytest

from fspecaug.feature_store import FeatureMatrix

_ACCEPTANCE = []


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and (
        report.when == "call" or (report.when == "setup" and report.outcome != "passed")
    ):
        _ACCEPTANCE.append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _ACCEPTANCE:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {name}")


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def small_corpus(np_rng):
    return [
        FeatureMatrix(f"u{i}", np_rng.normal(3.0, 2.0, size=(T, 6)))
        for i, T in enumerate([5, 1, 12, 30])
    ]


def random_window(rng, tau=41, D=80):
    return rng.standard_normal((tau, D)).astype(np.float32)
