"""Simulation clock.

All timestamps in the platform come from a single injected clock so tests are
free of wall-clock dependence. Times are float seconds since an arbitrary
epoch.
"""

from __future__ import annotations

import time


class Clock:
    """Wall clock (production default)."""

    def now(self) -> float:
        return time.time()


class SimClock(Clock):
    """Deterministic clock for tests and reproducible simulations."""

    def __init__(self, start: float = 1_000_000.0):
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def advance(self, seconds: float) -> float:
        if seconds < 0:
            raise ValueError("clock cannot move backwards")
        self._now += seconds
        return self._now
