"""Collects one pass/fail line per acceptance criterion and prints them at the
end of the run, whatever the verbosity."""

import pytest

_RESULTS: dict[str, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        if rep.when == "setup" and not rep.skipped:
            detail = f"setup error: {call.excinfo.value!r}" if call.excinfo else "setup error"
        _RESULTS[name] = (status, detail)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_RESULTS, key=lambda s: int(s[1:])):
        status, detail = _RESULTS[name]
        terminalreporter.write_line(f"{name} {status}  {detail}")
