import time

import pytest

ACCEPTANCE: dict = {}


class Criterion:
    """Records pass/fail and wall time for one acceptance criterion."""

    def __init__(self, number: int, title: str, budget: float):
        self.number = number
        self.title = title
        self.budget = budget
        self.checks: list[tuple[str, bool]] = []
        self.elapsed = 0.0
        self._t0 = None

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed += time.perf_counter() - self._t0
        if exc_type is not None and not issubclass(exc_type, AssertionError):
            self.checks.append((f"raised {exc_type.__name__}", False))
        return False

    def check(self, name: str, ok: bool) -> bool:
        self.checks.append((name, bool(ok)))
        return bool(ok)

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(ok for _, ok in self.checks) and self.elapsed <= self.budget


@pytest.fixture
def criterion():
    def make(number: int, title: str, budget: float) -> Criterion:
        # several tests may contribute checks to the same criterion
        if number not in ACCEPTANCE:
            ACCEPTANCE[number] = Criterion(number, title, budget)
        return ACCEPTANCE[number]
    return make


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        c = ACCEPTANCE[n]
        status = "PASS" if c.passed else "FAIL"
        failed = [name for name, ok in c.checks if not ok]
        extra = f" failing: {', '.join(failed)}" if failed else ""
        if c.elapsed > c.budget:
            extra += f" over budget ({c.budget:g} s)"
        terminalreporter.write_line(f"[{status}] {n:2d}. {c.title} ({c.elapsed:.3f} s){extra}")
