import pytest

_RESULTS: dict[str, tuple[str, str, float]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(tag, title): end-to-end acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None:
        return
    tag, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        _RESULTS[tag] = ("PASS" if rep.passed else "FAIL", title, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_RESULTS, key=lambda t: int(t[2:])):
        status, title, secs = _RESULTS[tag]
        terminalreporter.write_line(f"{tag:<5} {status}  {title} ({secs:.1f} s)")
