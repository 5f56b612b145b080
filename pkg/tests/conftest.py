import pytest

_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    key = getattr(item.function, "criterion", None)
    if key is not None and rep.when == "call":
        detail = item.funcargs.get("criterion_log", {}).get("detail", "")
        _RESULTS[key] = ("PASS" if rep.passed else "FAIL", item.function.title, detail)


@pytest.fixture
def criterion_log():
    """Dict the acceptance tests fill with a one-line summary of what they measured."""
    return {}


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for key in sorted(_RESULTS):
        status, title, detail = _RESULTS[key]
        terminalreporter.write_line(f"[AC{key}] {status}  {title}: {detail}")
