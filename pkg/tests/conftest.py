import pytest

_ACCEPTANCE = {}


class _Recorder:
    def __init__(self, capsys):
        self.capsys = capsys

    def __call__(self, number, title, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {title}"
        if detail:
            line += f" | {detail}"
        _ACCEPTANCE[number] = line
        with self.capsys.disabled():
            print("\n" + line)
        return ok


@pytest.fixture
def criterion(capsys):
    """Record and print the one-line verdict of an acceptance criterion."""
    return _Recorder(capsys)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
