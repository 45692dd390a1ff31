from __future__ import annotations

import time

import pytest

from optcons.scenario import build_scenario, shipped_scenario
from optcons.sim import run_closed_loop

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class RunCache:
    """Closed-loop runs keyed by (scenario, seed, overrides); each is simulated once per session."""

    def __init__(self):
        self._runs = {}

    def get(self, name: str, seed: int, **overrides):
        key = (name, seed, tuple(sorted(overrides.items())))
        if key not in self._runs:
            doc = shipped_scenario(name)
            for path, value in overrides.items():
                section, field = path.split("__")
                doc[section][field] = value
            sc = build_scenario(doc, seed)
            start = time.perf_counter()
            traj, report = run_closed_loop(sc)
            self._runs[key] = (sc, traj, report, time.perf_counter() - start)
        return self._runs[key]


@pytest.fixture(scope="session")
def runs() -> RunCache:
    return RunCache()
