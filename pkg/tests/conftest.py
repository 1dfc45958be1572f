import pytest

VERDICTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def verdict():
    """Record one acceptance line: ``verdict(key, ok, detail)``."""

    def record(key: str, ok: bool, detail: str):
        VERDICTS[key] = (ok, detail)
        print(f"{'PASS' if ok else 'FAIL'} {key}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(VERDICTS, key=lambda k: (int(k.split()[1].rstrip(":")), k)):
        ok, detail = VERDICTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {key}: {detail}")
