"""Shared pytest plumbing: acceptance criteria are recorded as one
pass/fail line each and echoed in the terminal summary."""

import time
from contextlib import contextmanager

import pytest

ACCEPTANCE_LINES: list[str] = []


@contextmanager
def criterion(num: int, name: str, budget_s: float, extra_s: float = 0.0):
    """Record one acceptance criterion: PASS/FAIL plus wall time vs budget."""
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        ACCEPTANCE_LINES.append(f"criterion {num:2d} [{name}]: FAIL")
        raise
    elapsed = time.perf_counter() - start + extra_s
    if elapsed >= budget_s:
        ACCEPTANCE_LINES.append(
            f"criterion {num:2d} [{name}]: FAIL "
            f"(over budget: {elapsed:.1f}s >= {budget_s:g}s)")
        pytest.fail(f"criterion {num} exceeded its {budget_s:g}s budget "
                    f"({elapsed:.1f}s)")
    ACCEPTANCE_LINES.append(
        f"criterion {num:2d} [{name}]: PASS "
        f"({elapsed:.1f}s < {budget_s:g}s)")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
