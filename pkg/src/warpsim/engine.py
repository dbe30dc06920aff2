"""Discrete-event kernel with integer-nanosecond time and named RNG substreams."""

from __future__ import annotations

import hashlib
import heapq
import random
from typing import Any, Callable

NS_PER_S = 1_000_000_000


def seconds_to_ns(t: float) -> int:
    return int(round(t * NS_PER_S))


def ns_to_seconds(t: int) -> float:
    return t / NS_PER_S


def format_time(t_ns: int) -> str:
    """Render integer nanoseconds as seconds with nine fractional digits."""
    sign = "-" if t_ns < 0 else ""
    whole, frac = divmod(abs(t_ns), NS_PER_S)
    return f"{sign}{whole}.{frac:09d}"


class SchedulingError(RuntimeError):
    pass


class Event:
    """Handle for a scheduled action. Ordered by (time, seq)."""

    __slots__ = ("time", "seq", "action", "args", "cancelled")

    def __init__(self, time: int, seq: int, action: Callable[..., Any], args: tuple):
        self.time = time
        self.seq = seq
        self.action = action
        self.args = args
        self.cancelled = False

    def __repr__(self) -> str:
        name = getattr(self.action, "__qualname__", repr(self.action))
        return f"Event(t={format_time(self.time)}, seq={self.seq}, {name})"


class Simulator:
    """Single-threaded event loop. Ties at equal time run in insertion order."""

    def __init__(self) -> None:
        self.now = 0
        # (time, seq, event) tuples so heap comparisons stay in C
        self._queue: list[tuple[int, int, Event]] = []
        self._seq = 0
        self.executed = 0

    def schedule(self, time: int, action: Callable[..., Any], *args: Any) -> Event:
        if time < self.now:
            raise SchedulingError(
                f"cannot schedule at {format_time(time)}, clock is {format_time(self.now)}"
            )
        ev = Event(time, self._seq, action, args)
        self._seq += 1
        heapq.heappush(self._queue, (time, ev.seq, ev))
        return ev

    def schedule_in(self, delay: int, action: Callable[..., Any], *args: Any) -> Event:
        return self.schedule(self.now + delay, action, *args)

    @staticmethod
    def cancel(ev: Event | None) -> None:
        if ev is not None:
            ev.cancelled = True

    def pending(self) -> int:
        return sum(1 for _, _, ev in self._queue if not ev.cancelled)

    def run_until(self, t_end: int) -> int:
        """Execute every event with time <= t_end; leaves the clock at t_end."""
        if t_end < self.now:
            raise SchedulingError("run_until target lies in the past")
        queue = self._queue
        pop = heapq.heappop
        count = 0
        while queue and queue[0][0] <= t_end:
            ev = pop(queue)[2]
            if ev.cancelled:
                continue
            self.now = ev.time
            ev.action(*ev.args)
            count += 1
        self.now = t_end
        self.executed += count
        return count


def _substream_seed(seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{seed}/{name}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


class RngStreams:
    """Named, independent random streams derived from one 64-bit seed.

    Each name gets its own generator, so draws in one subsystem never shift
    the sequence seen by another.
    """

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._streams: dict[str, random.Random] = {}

    def __getitem__(self, name: str) -> random.Random:
        stream = self._streams.get(name)
        if stream is None:
            stream = random.Random(_substream_seed(self.seed, name))
            self._streams[name] = stream
        return stream
