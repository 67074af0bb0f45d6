import pytest

_KEY = pytest.StashKey[dict]()


@pytest.fixture
def record(request):
    """``record(criterion, ok, detail)`` stores a line for the acceptance summary."""
    results = request.config.stash.setdefault(_KEY, {})

    def _record(criterion, ok, detail=""):
        results[criterion] = (bool(ok), detail)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    results = terminalreporter.config.stash.get(_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        ok, detail = results[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")
