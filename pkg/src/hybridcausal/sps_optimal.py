"""SPS-optimal unicast engine.

Sent and not-yet-sent messages share one sliding array (the unified
buffer). Four indexes keep the work per event amortized constant:

``m1``  first message not yet network-sent;
``p2``  first missing permit from a sender other than the first permit's;
``m2``  first message whose permit index is beyond ``p2`` (cannot be sent);
``u2``  first unacked message to a receiver other than the oldest message's.

Besides the updates in the published pseudo-code, ``u2`` and ``m2`` are
advanced when a causal-send appends to the tail, the same way ``p2`` is
advanced when a permit is appended. Without this the lazily kept indexes
can fall behind ``u.first``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Optional

from .basic import Per, ProtocolError, Receiver
from .sliding import IdxSlidingMap, SlidingArray
from .wire import Delivery, Kind, WireMessage, ack, msg, permit


@dataclass(slots=True)
class OptMsg:
    rcv: str
    mid: int
    pid: int
    per: int
    pl: Any
    sent: bool = False
    needs_permit: bool = False
    acked: bool = False


class SpsOptimalProcess(Receiver):
    engine = "sps_optimal"

    def __init__(self, pid: str, debug: bool = False) -> None:
        super().__init__(pid, debug)
        self.ck = 1
        self.u: SlidingArray[OptMsg] = SlidingArray()
        self.p: IdxSlidingMap[Per] = IdxSlidingMap()
        self.ls: dict[str, int] = {}
        self.p2 = 0
        self.m1 = 0
        self.m2 = 0
        self.u2 = 0

    def causal_send(self, j: str, payload: Any) -> list[WireMessage]:
        if j == self.pid:
            raise ValueError(f"{self.pid}: self-sends are not supported")
        m = OptMsg(j, self.ck, self.ls.get(j, 0), self.p.next, payload)
        self.ls[j] = self.ck
        self.ck += 1
        u = self.u
        k = u.add(m)
        if self.u2 == k and u.peek().rcv == j:
            self.u2 = k + 1
        if self.m2 == k and m.per <= self.p2:
            self.m2 = k + 1
        return self.send_interval(k, self.p2)

    def send_interval(self, k: int, p: int) -> list[WireMessage]:
        """Send what is allowed in ``u[k:]`` up to messages needing permits beyond ``p``."""
        u, pm = self.u, self.p
        out: list[WireMessage] = []
        p1 = pm.first
        head = pm.peek()
        s = head.snd if head is not None else None
        r = u.peek().rcv if len(u) else None
        nxt = u.next
        while k < nxt:
            m = u[k]
            if m.per > p:
                break
            self.steps += 1
            if not m.sent and (m.per <= p1 or m.rcv == s):
                if self.debug:
                    self._check_sps(m)
                m.sent = True
                m.needs_permit = self.u2 < k or m.rcv != r
                out.append(msg(self.pid, m.rcv, m.mid, m.pid, m.needs_permit, m.pl))
            k += 1
        while self.m1 < nxt and u[self.m1].sent:
            self.steps += 1
            self.m1 += 1
        return out

    def update_p2_m2(self) -> None:
        pm, u = self.p, self.u
        p1 = pm.first
        if p1 == pm.next:
            return
        s = pm[p1].snd
        while self.p2 < pm.next:
            e = pm[self.p2]
            if e is not None and e.snd != s:
                break
            self.steps += 1
            self.p2 += 1
        while self.m2 < u.next and u[self.m2].per <= self.p2:
            self.steps += 1
            self.m2 += 1

    def receive(self, w: WireMessage) -> tuple[list[Delivery], list[WireMessage]]:
        kind = w.kind
        if kind == Kind.MSG:
            return self._on_msg(w)
        if kind == Kind.ACK:
            return [], self.on_ack(w.src, w.mid)
        if kind == Kind.PERMIT:
            return [], self.on_permit(w.src, w.mid)
        raise ProtocolError(f"unexpected wire kind {kind!r}")

    def _add_permit(self, j: str, mid: int) -> None:
        pm = self.p
        k = pm.add(Per(j, mid))
        if self.p2 == k and pm.peek().snd == j:
            self.p2 = k + 1

    def on_permit(self, j: str, n: int) -> list[WireMessage]:
        pm = self.p
        per = Per(j, n)
        k = pm.index(per)
        if k is None:
            return []
        p1 = pm.first
        pm.remove(per)
        out: list[WireMessage] = []
        if k == p1:
            k = pm.first
            out += self.send_interval(self.m1, k)
        if k == self.p2:
            low = self.m2
            self.update_p2_m2()
            out += self.send_interval(low, self.p2)
        return out

    def on_ack(self, j: str, n: int) -> list[WireMessage]:
        u = self.u
        k = n - 1
        if k < u.first:
            return [permit(self.pid, j, n)]
        if k >= u.next or not u[k].sent:
            self.anomalies += 1
            return []
        m = u[k]
        m.acked = True
        m.pl = None
        out: list[WireMessage] = []
        permitted_head = 0
        if k == u.first:
            u.remove()
            while len(u):
                self.steps += 1
                m = u.peek()
                if m.sent and m.needs_permit and m.rcv != j:
                    if self.debug:
                        self._check_permit_guard(m, u.first)
                    out.append(permit(self.pid, m.rcv, m.mid))
                    permitted_head = m.mid
                if not m.acked:
                    break
                u.remove()
            k = u.first
        if k == self.u2 < u.next:
            r = u.peek().rcv
            while self.u2 < u.next:
                m = u[self.u2]
                if not m.acked and m.rcv != r:
                    break
                self.steps += 1
                # the head may have just had its permit sent above
                if m.sent and m.needs_permit and m.rcv == r and m.mid != permitted_head:
                    if self.debug:
                        self._check_permit_guard(m, self.u2)
                    out.append(permit(self.pid, m.rcv, m.mid))
                self.u2 += 1
        return out

    def on_timer(self) -> list[WireMessage]:
        out = [msg(self.pid, m.rcv, m.mid, m.pid, m.needs_permit, m.pl)
               for m in self.u if m.sent and not m.acked]
        out.extend(ack(self.pid, per.snd, per.mid) for per in self.p)
        return out

    # -- checks --------------------------------------------------------

    def _check_sps(self, m: OptMsg) -> None:
        pm = self.p
        for idx in range(pm.first, m.per):
            e = pm[idx]
            if e is not None and e.snd != m.rcv:
                raise ProtocolError(
                    f"{self.pid}: sending {m.mid} to {m.rcv} while permit {e} is missing")

    def _check_permit_guard(self, m: OptMsg, k: int) -> None:
        u = self.u
        for idx in range(u.first, k):
            e = u[idx]
            if not e.acked and e.rcv != m.rcv:
                raise ProtocolError(
                    f"{self.pid}: permit for {m.mid} while {e.mid} to {e.rcv} is unacked")

    def expected_indexes(self) -> tuple[int, int, int, int]:
        """Recompute (m1, p2, m2, u2) from scratch."""
        u, pm = self.u, self.p
        m1 = next((k for k in range(u.first, u.next) if not u[k].sent), u.next)
        head = pm.peek()
        p2 = pm.next
        if head is not None:
            p2 = next((k for k in range(pm.first, pm.next)
                       if pm[k] is not None and pm[k].snd != head.snd), pm.next)
        m2 = next((k for k in range(u.first, u.next) if u[k].per > p2), u.next)
        u2 = u.next
        if len(u):
            r = u.peek().rcv
            u2 = next((k for k in range(u.first, u.next)
                       if not u[k].acked and u[k].rcv != r), u.next)
        return m1, p2, m2, u2

    def check_invariants(self) -> None:
        actual = (self.m1, self.p2, self.m2, self.u2)
        expected = self.expected_indexes()
        if actual != expected:
            raise ProtocolError(f"{self.pid}: (m1, p2, m2, u2) = {actual}, expected {expected}")
        u = self.u
        for k in range(u.first, u.next):
            if u[k].mid != k + 1:
                raise ProtocolError(f"slot {k} holds mid {u[k].mid}")

    def quiescent(self) -> bool:
        return not len(self.u) and not len(self.p) and not any(self.rb.values())

    @property
    def total_steps(self) -> int:
        return self.steps + self.u.steps + self.p.steps

    def send_buffer_size(self) -> int:
        return sum(1 for m in self.u if not m.sent)
