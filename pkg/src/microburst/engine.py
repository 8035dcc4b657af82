"""Deterministic single-threaded discrete-event engine.

Events fire in (fire_time, sequence_number) order; the sequence number is
a global insertion counter, so simultaneous events dispatch in the order
they were scheduled.  Identical (config, seed) therefore replays the exact
same event sequence.
"""

import heapq
from dataclasses import dataclass


class SchedulingInPast(Exception):
    """Raised when an event is scheduled before the engine's current time."""


@dataclass
class RunSummary:
    events_dispatched: int = 0
    packets_sent: int = 0
    packets_delivered: int = 0
    packets_dropped: int = 0
    packets_marked: int = 0


class Engine:
    """Event loop: schedule callbacks, cancel them, run to a horizon.

    Heap entries are mutable lists ``[time, seq, fn, arg]``; cancellation
    nulls the callback in place and the loop skips dead entries on pop,
    so cancel is O(1).
    """

    def __init__(self):
        self._heap = []
        self._seq = 0
        self._live = {}
        self.now = 0
        self.last_dispatch_ns = 0
        self.stats = RunSummary()

    def schedule(self, fire_time_ns: int, fn, arg=None) -> int:
        """Queue `fn(now, arg)` at `fire_time_ns`; returns a cancellation handle."""
        if fire_time_ns < self.now:
            raise SchedulingInPast(
                f"fire_time {fire_time_ns} < now {self.now}"
            )
        seq = self._seq
        self._seq = seq + 1
        entry = [fire_time_ns, seq, fn, arg]
        self._live[seq] = entry
        heapq.heappush(self._heap, entry)
        return seq

    def cancel(self, handle: int) -> bool:
        """True iff the event was still pending and is now removed."""
        entry = self._live.pop(handle, None)
        if entry is None:
            return False
        entry[2] = None
        return True

    def pending(self) -> int:
        return len(self._live)

    def run_until(self, t_end_ns: int) -> RunSummary:
        """Dispatch every event with fire_time <= t_end_ns."""
        heap = self._heap
        live = self._live
        stats = self.stats
        n = 0
        while heap and heap[0][0] <= t_end_ns:
            t, seq, fn, arg = heapq.heappop(heap)
            if fn is None:
                continue
            del live[seq]
            self.now = t
            n += 1
            fn(t, arg)
        stats.events_dispatched += n
        self.last_dispatch_ns = self.now
        if t_end_ns > self.now:
            self.now = t_end_ns
        return stats
