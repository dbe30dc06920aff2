import pytest
from hypothesis import given, strategies as st

from warpsim.engine import NS_PER_S, RngStreams, SchedulingError, Simulator, format_time, seconds_to_ns


def test_same_time_events_run_in_insertion_order():
    sim = Simulator()
    seen = []
    for tag in "abcde":
        sim.schedule(5, seen.append, tag)
    sim.run_until(10)
    assert seen == list("abcde")


def test_empty_run_advances_clock():
    sim = Simulator()
    assert sim.run_until(600 * NS_PER_S) == 0
    assert sim.now == 600 * NS_PER_S


def test_scheduling_in_the_past_is_an_error():
    sim = Simulator()
    sim.run_until(100)
    with pytest.raises(SchedulingError):
        sim.schedule(99, lambda: None)


def test_cancelled_event_never_runs():
    sim = Simulator()
    seen = []
    ev = sim.schedule(3, seen.append, "x")
    sim.schedule(4, seen.append, "y")
    sim.cancel(ev)
    assert sim.run_until(10) == 1
    assert seen == ["y"]


def test_events_beyond_horizon_stay_queued():
    sim = Simulator()
    seen = []
    sim.schedule(10, seen.append, 1)
    sim.schedule(11, seen.append, 2)
    sim.run_until(10)
    assert seen == [1]
    sim.run_until(20)
    assert seen == [1, 2]


@given(st.lists(st.integers(min_value=0, max_value=1000), min_size=1, max_size=60))
def test_clock_is_monotone(times):
    sim = Simulator()
    stamps = []
    for t in times:
        sim.schedule(t, lambda: stamps.append(sim.now))
    sim.run_until(1000)
    assert stamps == sorted(stamps)
    assert len(stamps) == len(times)


def test_events_scheduled_during_run_respect_order():
    sim = Simulator()
    seen = []

    def first():
        seen.append("first")
        sim.schedule_in(0, seen.append, "chained")

    sim.schedule(1, first)
    sim.schedule(1, seen.append, "second")
    sim.run_until(2)
    assert seen == ["first", "second", "chained"]


def test_substreams_are_independent_of_interleaving():
    a = RngStreams(42)
    b = RngStreams(42)
    xs = [a["jitter"].random() for _ in range(5)]
    for _ in range(100):
        b["backoff"].random()
    ys = [b["jitter"].random() for _ in range(5)]
    assert xs == ys
    assert RngStreams(43)["jitter"].random() != RngStreams(42)["jitter"].random()


def test_time_formatting():
    assert format_time(0) == "0.000000000"
    assert format_time(120 * NS_PER_S + 1) == "120.000000001"
    assert seconds_to_ns(0.2) == 200_000_000
