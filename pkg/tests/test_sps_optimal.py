from hybridcausal.basic import BasicProcess, Per
from hybridcausal.sps_optimal import SpsOptimalProcess
from hybridcausal.wire import Kind, msg


def proc(pid="i"):
    return SpsOptimalProcess(pid, debug=True)


def deliver_flagged(p, sender, mid, pid=None):
    p.receive(msg(sender, p.pid, mid, mid - 1 if pid is None else pid, True, f"{sender}{mid}"))


def sends(out):
    return [(w.dst, w.mid) for w in out if w.kind == Kind.MSG]


def permits(out):
    return [(w.dst, w.mid) for w in out if w.kind == Kind.PERMIT]


def test_fresh_send_unflagged():
    p = proc()
    (w,) = p.causal_send("j", "x")
    assert w.needs_permit is False
    p.check_invariants()


def test_send_to_permit_owner_not_blocked():
    p = proc()
    deliver_flagged(p, "j", 1)
    assert sends(p.causal_send("j", "x")) == [("j", 1)]
    b = BasicProcess("i")
    deliver_flagged(b, "j", 1)
    assert b.causal_send("j", "x") == []
    p.check_invariants()


def test_foreign_permit_blocks():
    p = proc()
    deliver_flagged(p, "k", 1)
    assert p.causal_send("j", "x") == []
    assert p.send_buffer_size() == 1
    p.check_invariants()


def test_later_message_overtakes_blocked_head():
    p = proc()
    deliver_flagged(p, "k", 1)
    assert p.causal_send("j", "x") == []
    assert sends(p.causal_send("k", "y")) == [("k", 2)]
    assert p.m1 == 0
    p.check_invariants()
    assert sends(p.on_permit("k", 1)) == [("j", 1)]
    assert p.m1 == 2
    p.check_invariants()


def test_same_receiver_run_unflagged():
    p = proc()
    p.causal_send("j", "a")
    (w,) = p.causal_send("j", "b")
    assert w.needs_permit is False
    (w,) = p.causal_send("k", "c")
    assert w.needs_permit is True
    (w,) = p.causal_send("j", "d")
    assert w.needs_permit is True
    p.check_invariants()


def test_first_flagged_delivery_advances_p2():
    p = proc()
    deliver_flagged(p, "j", 1)
    assert (p.p.first, p.p.next, p.p2) == (0, 1, 1)
    deliver_flagged(p, "k", 1)
    assert p.p2 == 1
    deliver_flagged(p, "j", 2)
    assert p.p2 == 1
    p.check_invariants()


def test_p2_rescan_after_foreign_permit_removed():
    p = proc()
    for s, mid in [("A", 1), ("A", 2), ("B", 1), ("A", 3), ("C", 1)]:
        deliver_flagged(p, s, mid)
    assert p.p2 == 2
    p.on_permit("B", 1)
    assert p.p2 == 4
    p.check_invariants()
    p.on_permit("C", 1)
    assert p.p2 == p.p.next == 5
    assert p.m2 == p.u.next
    p.check_invariants()


def test_empty_permit_map_update_is_noop():
    p = proc()
    before = (p.p2, p.m2)
    p.update_p2_m2()
    assert (p.p2, p.m2) == before


def test_first_removal_reaching_p2_runs_both_branches():
    p = proc()
    deliver_flagged(p, "A", 1)
    deliver_flagged(p, "B", 1)
    assert p.p2 == 1
    assert p.causal_send("C", "x") == []
    assert p.causal_send("B", "y") == []
    out = p.on_permit("A", 1)
    assert sends(out) == [("B", 2)]
    p.check_invariants()
    assert sends(p.on_permit("B", 1)) == [("C", 1)]
    p.check_invariants()


def test_middle_permit_removal_sends_nothing():
    p = proc()
    for s, mid in [("A", 1), ("A", 2), ("B", 1)]:
        deliver_flagged(p, s, mid)
    p.causal_send("C", "x")
    assert p.on_permit("A", 2) == []
    assert p.on_permit("A", 2) == []  # duplicate
    p.check_invariants()


def test_head_ack_landing_on_u2_sends_each_permit_once():
    p = proc()
    p.causal_send("k", "y")
    p.causal_send("j", "x")
    p.causal_send("j", "z")
    assert p.u2 == 1
    out = p.on_ack("k", 1)
    assert permits(out) == [("j", 2), ("j", 3)]
    assert p.u2 == 3
    p.check_invariants()


def test_ack_at_u2_permits_same_receiver_run():
    p = proc()
    for dst in "jkjjk":
        p.causal_send(dst, dst)
    assert p.u2 == 1
    out = p.on_ack("k", 2)
    assert permits(out) == [("j", 3), ("j", 4)]
    assert p.u2 == 4
    p.check_invariants()


def test_ack_for_dropped_message_reemits_permit():
    p = proc()
    p.causal_send("j", "x")
    p.on_ack("j", 1)
    assert permits(p.on_ack("j", 1)) == [("j", 1)]


def test_timer_skips_unsent_messages():
    p = proc()
    assert p.on_timer() == []
    deliver_flagged(p, "k", 1)
    p.causal_send("j", "x")  # blocked
    p.causal_send("k", "y")  # sent
    out = p.on_timer()
    assert sends(out) == [("k", 2)]
    assert [(w.kind, w.dst) for w in out if w.kind == Kind.ACK] == [(Kind.ACK, "k")]


def test_expected_indexes_on_fresh_state():
    assert proc().expected_indexes() == (0, 0, 0, 0)
    p = proc()
    deliver_flagged(p, "k", 1)
    assert list(p.p) == [Per("k", 1)]
