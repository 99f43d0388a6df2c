"""Time sources.

A clock is any zero-argument callable returning integer milliseconds since
the Unix epoch (UTC). Block timestamps and attestation decision times come
exclusively from an injected clock so tests and the CLI/HTTP parity check
can pin them (``fixed:<ms>``).
"""

from __future__ import annotations

import time
from typing import Callable

Clock = Callable[[], int]


def system_clock() -> int:
    return time.time_ns() // 1_000_000


def fixed_clock(timestamp_ms: int) -> Clock:
    """Clock frozen at ``timestamp_ms``."""

    def _clock() -> int:
        return timestamp_ms

    return _clock


class TickingClock:
    """Deterministic clock advancing a fixed step per reading.

    Used by the network simulation harness so transcripts are bit-stable.
    """

    def __init__(self, start_ms: int = 1_000, step_ms: int = 1_000):
        self._now = start_ms
        self._step = step_ms

    def __call__(self) -> int:
        now = self._now
        self._now += self._step
        return now


def parse_clock_spec(spec: str | None) -> Clock:
    """Parse a clock flag value: ``system`` (default) or ``fixed:<ms>``."""
    if spec is None or spec == "system":
        return system_clock
    if spec.startswith("fixed:"):
        try:
            return fixed_clock(int(spec.split(":", 1)[1]))
        except ValueError:
            raise ValueError(f"bad fixed clock spec: {spec!r}") from None
    raise ValueError(f"unknown clock spec: {spec!r}")
