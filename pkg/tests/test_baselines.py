import pytest

from hybridcausal.baselines import CykasProcess, MFProcess
from hybridcausal.basic import ProtocolError
from hybridcausal.wire import Kind, ack, msg, yct


def test_mf_second_send_waits_for_ack():
    p = MFProcess("a")
    assert [w.mid for w in p.causal_send("b", "x")] == [1]
    assert p.causal_send("c", "y") == []
    assert p.awaiting_ack
    _, out = p.receive(ack("b", "a", 1))
    assert [(w.dst, w.mid) for w in out] == [("c", 2)]


def test_mf_stale_ack_ignored_and_timer_retransmits():
    p = MFProcess("a")
    p.causal_send("b", "x")
    assert [w.mid for w in p.on_timer()] == [1]
    p.receive(ack("b", "a", 1))
    assert p.receive(ack("b", "a", 1)) == ([], [])
    assert p.on_timer() == [] and p.quiescent()


def test_mf_receiver_dedups():
    p = MFProcess("b")
    w = msg("a", "b", 1, 0, False, "x")
    assert len(p.receive(w)[0]) == 1
    d, out = p.receive(w)
    assert d == [] and out[0].kind == Kind.ACK


def test_cykas_single_pair_all_normal_sends():
    p = CykasProcess("a")
    (w,) = p.causal_send("b", "x")
    assert not w.eager
    p.receive(ack("b", "a", 1))
    (w,) = p.causal_send("b", "y")
    assert not w.eager


def test_cykas_eager_send_and_yct():
    p = CykasProcess("a")
    p.causal_send("b", "x")
    (w,) = p.causal_send("c", "y")
    assert w.eager
    _, out = p.receive(ack("b", "a", 1))
    assert [(o.kind, o.dst, o.mid) for o in out] == [(Kind.YCT, "c", 2)]
    _, out = p.receive(ack("c", "a", 2))
    assert out == [] and p.quiescent()


def test_cykas_one_in_transit_per_destination():
    p = CykasProcess("a")
    p.causal_send("b", "x")
    assert p.causal_send("b", "y") == []
    _, out = p.receive(ack("b", "a", 1))
    assert [(o.dst, o.mid, o.eager) for o in out] == [("b", 2, False)]


def test_cykas_secret_mode_buffers_sends():
    p = CykasProcess("i")
    d, _ = p.receive(msg("j", "i", 1, 0, False, "a", eager=True))
    assert len(d) == 1 and p.mode == 1
    assert p.causal_send("k", "m") == []
    _, out = p.receive(yct("j", "i", 1))
    assert p.mode == 0 and [o.dst for o in out] == ["k"]
    assert p.mode_log == [1, 0]


def test_cykas_yct_in_normal_mode_is_corruption():
    with pytest.raises(ProtocolError):
        CykasProcess("i").receive(yct("j", "i", 1))
