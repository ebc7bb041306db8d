import time

import pytest

_RESULTS: list = []


class Criterion:
    """Records one acceptance check so the terminal summary can list PASS/FAIL per criterion."""

    def __init__(self, number: int, title: str, budget_s: float | None):
        self.number, self.title, self.budget_s = number, title, budget_s
        self.details: list = []
        self.ok = True
        self.finished = False
        self.start = time.monotonic()

    def check(self, ok: bool, detail: str) -> None:
        self.details.append(("" if ok else "!! ") + detail)
        self.ok = self.ok and bool(ok)

    def finish(self) -> None:
        self.finished = True
        elapsed = time.monotonic() - self.start
        if self.budget_s is not None:
            self.check(elapsed < self.budget_s, f"runtime {elapsed:.1f}s < {self.budget_s:g}s")
        status = "PASS" if self.ok else "FAIL"
        line = f"[{status}] criterion {self.number}: {self.title} | " + "; ".join(self.details)
        _RESULTS.append((self.number, line))
        print(line)


@pytest.fixture
def criterion():
    made = []

    def start(number, title, budget_s=None):
        c = Criterion(number, title, budget_s)
        made.append(c)
        return c

    yield start
    for c in made:
        if not c.finished:
            c.check(False, "aborted by an exception")
            c.finish()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_RESULTS):
        terminalreporter.write_line(line)
