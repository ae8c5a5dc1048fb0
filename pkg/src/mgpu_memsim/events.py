"""Deterministic discrete-event kernel.

A single queue orders events lexicographically by (time, seq) where seq
is a global schedule counter, so simultaneous events pop in the order
they were scheduled.  Two runs with identical inputs therefore pop the
exact same event sequence.  The kernel is strictly single-threaded; one
queue instance must never be shared across threads.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from .errors import SimulationIntegrityError


@dataclass(slots=True)
class Event:
    time: int  # picoseconds
    target: str  # component identifier the dispatcher routes to
    kind: str
    payload: Any = None
    seq: int = -1  # stamped by the queue at schedule time


class EventQueue:
    """Min-heap of events keyed by (time, seq)."""

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Event]] = []
        self._next_seq = 0
        self.now = 0
        self.scheduled_count = 0
        self.popped_count = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, event: Event) -> Event:
        if event.time < self.now:
            raise SimulationIntegrityError(
                f"scheduling into the past: event at {event.time} ps, "
                f"clock already at {self.now} ps")
        event.seq = self._next_seq
        self._next_seq += 1
        self.scheduled_count += 1
        heapq.heappush(self._heap, (event.time, event.seq, event))
        return event

    def pop(self) -> Event:
        if not self._heap:
            raise SimulationIntegrityError("pop from empty event queue")
        time, _seq, event = heapq.heappop(self._heap)
        if time < self.now:
            raise SimulationIntegrityError("event queue yielded time travel")
        self.now = time
        self.popped_count += 1
        return event


Handler = Callable[[Event], None]


def run_to_completion(queue: EventQueue,
                      handlers: Mapping[str, Handler]) -> int:
    """Drain the queue, dispatching each event to its target's handler.

    Returns the time of the last processed event (0 for an empty queue).
    Handlers may schedule further events; an event whose target has no
    registered handler is a fatal integrity error naming the component.
    """
    last = 0
    while len(queue):
        event = queue.pop()
        handler = handlers.get(event.target)
        if handler is None:
            raise SimulationIntegrityError(
                f"event targets unregistered component {event.target!r}")
        handler(event)
        last = event.time
    return last
