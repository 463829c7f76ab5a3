import numpy as np
import pytest

from simplex_hh.simplex import make_simplex, random_simplex, standard_simplex

_criteria: dict[int, list[str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion n of the suite")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        n, title = marker.args
        _criteria.setdefault(n, [title])
        _criteria[n].append("pass" if report.passed else "fail")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_criteria):
        title, *results = _criteria[n]
        status = "PASS" if results and all(r == "pass" for r in results) else "FAIL"
        terminalreporter.write_line(f"{status} criterion {n:>2}: {title}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def triangle():
    return standard_simplex(2)


@pytest.fixture
def unit_interval():
    return make_simplex([[0.0], [1.0]])


@pytest.fixture
def random_simplices():
    def make(n, count, seed=0):
        gen = np.random.default_rng(seed)
        return [random_simplex(n, gen) for _ in range(count)]
    return make
