import pytest

from crgerm.germ import make_germ

_ACCEPTANCE = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _ACCEPTANCE[number] = (title, rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {title}")


@pytest.fixture(scope="session")
def flat_germ():
    return make_germ("exp(-1/abs2(z))", p_origin_value=0, name="flat")


@pytest.fixture(scope="session")
def tilted_germ():
    return make_germ("exp(-1/abs2(z) + im(z^2)/2)", p_origin_value=0, name="flat-tilted")


@pytest.fixture(scope="session")
def tan_germ():
    from crgerm.verify import TANGENT_EXAMPLE, germ

    return germ(TANGENT_EXAMPLE)
