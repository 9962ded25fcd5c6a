import functools

import pytest

from btre.analysis import cutoff_sweep, winner_rank_distribution
from btre.distributions import pointmass, uniform01

ACCEPTANCE_SEED = 20261016
_CRITERIA: list[tuple[int, bool, str]] = []


@pytest.fixture
def record():
    """Record one acceptance criterion verdict for the terminal summary."""

    def _record(number: int, passed: bool, detail: str):
        _CRITERIA.append((number, bool(passed), detail))
        print(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number, passed, detail in sorted(_CRITERIA):
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {detail}")


@functools.lru_cache(maxsize=None)
def uniform_rank_run(n: int, replicates: int = 300, seed: int = ACCEPTANCE_SEED):
    """Winner-rank runs shared between unit and acceptance tests."""
    return winner_rank_distribution(uniform01(), n, replicates, seed)


SWEEP_C = (0.0, 0.25, 0.5, 1.0, 1.5, 2.0)


@functools.lru_cache(maxsize=None)
def pointmass_sweep(n: int = 2000, replicates: int = 500, seed: int = ACCEPTANCE_SEED):
    """Tagged-player sweep on a pointmass field.

    Sweep points share tournaments and tagged uniforms, so adding ``c = 0``
    leaves the other points unchanged.
    """
    return {p.c: p for p in cutoff_sweep(pointmass(1.0), n, SWEEP_C, replicates, seed)}
