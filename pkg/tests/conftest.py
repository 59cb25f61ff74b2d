import pytest

_LINES: dict[str, str] = {}


@pytest.fixture(scope="session")
def report():
    """Record one PASS/FAIL line per acceptance criterion."""

    def _report(key: str, ok: bool, detail: str) -> bool:
        line = f"{key} {'PASS' if ok else 'FAIL'}: {detail}"
        _LINES[key] = line
        print(line)
        return ok

    return _report


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_LINES, key=lambda k: int(k[2:])):
        terminalreporter.write_line(_LINES[key])
