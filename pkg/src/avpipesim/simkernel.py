"""Deterministic discrete-event kernel.

Virtual clock in integer microseconds, an ordered event queue with
insertion-order tie-breaking, and named seeded random streams.
"""

from __future__ import annotations

import heapq
import zlib
from typing import Callable, Optional

import numpy as np

US_PER_MS = 1_000
US_PER_S = 1_000_000


def ms(x: float) -> int:
    """Milliseconds to integer microseconds."""
    return round(x * US_PER_MS)


def sec(x: float) -> int:
    """Seconds to integer microseconds."""
    return round(x * US_PER_S)


class SchedulingError(Exception):
    """Raised when an event is scheduled before the current clock."""


class EventHandle:
    """Token returned by schedule(); permits cancellation."""

    __slots__ = ("fire_at", "seq", "action", "cancelled", "fired")

    def __init__(self, fire_at: int, seq: int, action: Callable[[], None]):
        self.fire_at = fire_at
        self.seq = seq
        self.action = action
        self.cancelled = False
        self.fired = False


class EventQueue:
    """Priority queue of timed events, popped in (fire_at, seq) order.

    seq is assigned at schedule time, so simultaneous events fire in the
    order they were scheduled. Cancelled entries stay in the heap and are
    skipped on pop.
    """

    def __init__(self):
        self._heap: list[tuple[int, int, EventHandle]] = []
        self._seq = 0
        self.clock = 0

    def schedule(self, fire_at: int, action: Callable[[], None]) -> EventHandle:
        if fire_at < 0:
            raise SchedulingError(f"negative fire time {fire_at}")
        if fire_at < self.clock:
            raise SchedulingError(
                f"cannot schedule at {fire_at} us: clock is already {self.clock} us"
            )
        handle = EventHandle(fire_at, self._seq, action)
        self._seq += 1
        heapq.heappush(self._heap, (fire_at, handle.seq, handle))
        return handle

    def cancel(self, handle: EventHandle) -> bool:
        if handle.fired or handle.cancelled:
            return False
        handle.cancelled = True
        return True

    def run_until(self, horizon: int) -> int:
        """Execute all events with fire_at <= horizon; returns the final clock."""
        while self._heap and self._heap[0][0] <= horizon:
            fire_at, _, handle = heapq.heappop(self._heap)
            if handle.cancelled:
                continue
            assert fire_at >= self.clock
            self.clock = fire_at
            handle.fired = True
            handle.action()
        if horizon > self.clock:
            self.clock = horizon
        return self.clock

    def __len__(self) -> int:
        return sum(1 for _, _, h in self._heap if not h.cancelled)


class RandomStream:
    """Named deterministic random stream.

    The same (seed, stream_id) pair yields the same draw sequence no
    matter how other streams are interleaved, so adding a stochastic
    source never perturbs existing ones.
    """

    def __init__(self, seed: int, stream_id: str):
        self.seed = seed
        self.stream_id = stream_id
        key = zlib.crc32(stream_id.encode("utf-8"))
        self._rng = np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, key])

    def lognormal(self, sigma: float) -> float:
        return float(self._rng.lognormal(mean=0.0, sigma=sigma))

    def uniform(self, lo: float, hi: float) -> float:
        return float(self._rng.uniform(lo, hi))

    def poisson(self, lam: float) -> int:
        return int(self._rng.poisson(lam))

    def choice(self, options, p=None):
        return self._rng.choice(options, p=p)

    @property
    def rng(self) -> np.random.Generator:
        return self._rng


class StreamFactory:
    """Hands out one RandomStream per named source for a base seed."""

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: dict[str, RandomStream] = {}

    def stream(self, stream_id: str) -> RandomStream:
        if stream_id not in self._streams:
            self._streams[stream_id] = RandomStream(self.seed, stream_id)
        return self._streams[stream_id]
