import random

import pytest
from hypothesis import given, strategies as st

from mgpu_memsim.errors import SimulationIntegrityError
from mgpu_memsim.events import Event, EventQueue, run_to_completion


def drain(queue):
    out = []
    while len(queue):
        out.append(queue.pop())
    return out


def test_single_event_advances_clock():
    q = EventQueue()
    q.schedule(Event(10, "x", "k"))
    e = q.pop()
    assert e.time == 10
    assert q.now == 10


def test_tie_break_by_schedule_order():
    q = EventQueue()
    e1 = q.schedule(Event(5, "x", "first"))
    e2 = q.schedule(Event(5, "x", "second"))
    popped = drain(q)
    assert [e.kind for e in popped] == ["first", "second"]
    assert e1.seq < e2.seq


def test_pop_order_matches_full_sort_oracle():
    # oracle: explicitly sort the scheduled (time, seq) pairs
    rng = random.Random(20240817)
    q = EventQueue()
    scheduled = [q.schedule(Event(rng.randrange(10_000), "x", "k", i))
                 for i in range(1000)]
    expected = sorted(scheduled, key=lambda e: (e.time, e.seq))
    popped = drain(q)
    assert [e.payload for e in popped] == [e.payload for e in expected]


@given(st.lists(st.integers(min_value=0, max_value=50), max_size=200))
def test_pop_never_goes_backwards(times):
    q = EventQueue()
    for t in times:
        q.schedule(Event(t, "x", "k"))
    last = (-1, -1)
    for e in drain(q):
        assert (e.time, e.seq) > last
        last = (e.time, e.seq)


def test_scheduling_into_the_past_is_fatal():
    q = EventQueue()
    q.schedule(Event(100, "x", "k"))
    q.pop()
    with pytest.raises(SimulationIntegrityError):
        q.schedule(Event(99, "x", "k"))


def test_conservation_counts():
    q = EventQueue()
    for t in (3, 1, 2):
        q.schedule(Event(t, "x", "k"))
    drain(q)
    assert q.scheduled_count == q.popped_count == 3


def test_run_to_completion_empty_queue_returns_zero():
    assert run_to_completion(EventQueue(), {}) == 0


def test_run_to_completion_single_noop():
    q = EventQueue()
    q.schedule(Event(42, "a", "k"))
    assert run_to_completion(q, {"a": lambda e: None}) == 42


def test_run_to_completion_event_chain():
    # three events, each scheduling the next at +10: finishes at 30
    q = EventQueue()
    hops = []

    def handler(event):
        hops.append(event.time)
        if len(hops) < 3:
            q.schedule(Event(event.time + 10, "a", "k"))

    q.schedule(Event(10, "a", "k"))
    assert run_to_completion(q, {"a": handler}) == 30
    assert hops == [10, 20, 30]


def test_unregistered_target_is_fatal_and_named():
    q = EventQueue()
    q.schedule(Event(1, "ghost", "k"))
    with pytest.raises(SimulationIntegrityError, match="ghost"):
        run_to_completion(q, {"a": lambda e: None})
