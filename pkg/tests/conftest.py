import pytest

_LINES: list[tuple[str, bool, str]] = []


class Recorder:
    """Collects one verdict per acceptance criterion for the terminal summary."""

    def __init__(self):
        self.checks: list[tuple[str, bool]] = []

    def check(self, label: str, ok: bool) -> bool:
        self.checks.append((label, bool(ok)))
        return bool(ok)

    def verdict(self, name: str) -> bool:
        ok = all(c for _, c in self.checks)
        detail = "; ".join(f"{'ok' if c else 'FAILED'}: {label}" for label, c in self.checks)
        _LINES.append((name, ok, detail))
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        for label, c in self.checks:
            print(f"    [{'ok' if c else 'FAILED'}] {label}")
        return ok


@pytest.fixture
def recorder():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, _ in _LINES:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
    for name, ok, detail in _LINES:
        if not ok:
            terminalreporter.write_line("")
            terminalreporter.write_line(f"{name}:")
            for part in detail.split("; "):
                if part.startswith("FAILED"):
                    terminalreporter.write_line(f"    {part}")
