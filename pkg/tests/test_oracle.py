import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridcausal.netsim import TraceLog, run
from hybridcausal.oracle import (BRUTE_FORCE_LIMIT, OracleSizeError, brute_force_hb, check,
                                 first_violation, stamp_trace, vc_happened_before)
from hybridcausal.scenarios import random_scenario


def trace(*rows):
    return TraceLog((t, p, e, m, q) for t, p, e, m, q in rows)


def test_delivery_before_send_orders_messages():
    # j delivers a before causal-sending c; b is delivered after
    t = trace(
        (0, "i", "c", 1, "j"),    # a
        (1, "k", "c", 1, "j"),    # b
        (10, "j", "d", 1, "i"),
        (20, "j", "c", 1, "l"),   # c
        (30, "j", "d", 1, "k"),
        (40, "l", "d", 1, "j"),
    )
    hb = vc_happened_before(stamp_trace(t))
    assert (("i", 1), ("j", 1)) in hb
    assert (("k", 1), ("j", 1)) not in hb
    assert check(t).ok


def test_detects_causal_overtaking():
    t = trace(
        (0, "i", "c", 1, "k"),
        (1, "i", "c", 2, "j"),
        (10, "j", "d", 2, "i"),
        (20, "j", "c", 1, "k"),
        (30, "k", "d", 1, "j"),   # i:1 happened-before j:1 but is still in flight
        (40, "k", "d", 1, "i"),
    )
    v = check(t)
    assert not v.ok
    assert [(x.receiver, x.delivered, x.overtaken) for x in v.violations] == [
        ("k", ("j", 1), ("i", 1))]
    assert first_violation(t).tick == 30


def test_detects_fifo_violation():
    t = trace((0, "i", "c", 1, "j"), (1, "i", "c", 2, "j"),
              (5, "j", "d", 2, "i"), (6, "j", "d", 1, "i"))
    assert len(check(t).violations) == 1


def test_duplicate_and_phantom_deliveries():
    t = trace((0, "i", "c", 1, "j"), (5, "j", "d", 1, "i"), (6, "j", "d", 1, "i"),
              (7, "j", "d", 9, "i"))
    kinds = [x.kind for x in check(t).violations]
    assert kinds == ["duplicate", "never sent"]


def test_undelivered_reported():
    t = trace((0, "i", "c", 1, "j"), (0, "i", "c", 2, "k"), (5, "j", "d", 1, "i"))
    v = check(t)
    assert v.causal_ok and not v.ok
    assert v.undelivered == [(("i", 2), "k")]
    assert check(t, expect_all_delivered=False).ok
    assert "undelivered\ti:2 -> k" in v.to_text()


def test_multicast_send_is_one_event():
    t = trace((0, "i", "c", 1, "j"), (0, "i", "c", 1, "k"),
              (5, "j", "d", 1, "i"), (6, "j", "c", 1, "k"),
              (7, "k", "d", 1, "i"), (8, "k", "d", 1, "j"))
    s = stamp_trace(t)
    assert s.dests[("i", 1)] == ["j", "k"]
    assert check(t).ok


def test_brute_force_size_limit():
    rows = [(n, "a", "c", n + 1, "b") for n in range(BRUTE_FORCE_LIMIT + 1)]
    with pytest.raises(OracleSizeError):
        brute_force_hb(trace(*rows))


@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 120),
       st.floats(0, 0.3), st.booleans())
def test_vector_clocks_match_brute_force(seed, n, messages, multicast, use_mc_engine):
    sc = random_scenario(seed=seed, n=n, messages=messages, loss=0.1, jitter=150,
                         multicast=multicast)
    engine = "multicast" if use_mc_engine else "basic"
    r = run(sc.config, sc.processes, engine, sc.script)
    assert brute_force_hb(r.trace) == vc_happened_before(stamp_trace(r.trace))
