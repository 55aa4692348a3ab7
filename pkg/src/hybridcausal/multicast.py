"""Basic multicast engine: one message id per multicast, acks tracked per receiver.

A message with more than one receiver always needs a permit, and its
permits go out only once the message itself and everything before it are
acked by every receiver. The receive side is the unicast one unchanged;
each receiver sees an ordinary MSG carrying its own predecessor id.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

from .basic import Per, ProtocolError, Receiver
from .sliding import SlidingArray, SlidingMap
from .wire import Delivery, Kind, WireMessage, ack, msg, permit


@dataclass(slots=True)
class McastMsg:
    rcv: tuple[str, ...]  # sorted, for deterministic emission order
    mid: int
    pids: dict[str, int]
    per: int
    pl: Any
    unack: set[str] = field(default_factory=set)
    needs_permit: Optional[bool] = None
    acked: bool = False


class MulticastProcess(Receiver):
    engine = "multicast"
    supports_multicast = True

    def __init__(self, pid: str, debug: bool = False) -> None:
        super().__init__(pid, debug)
        self.ck = 1
        self.u: SlidingArray[McastMsg] = SlidingArray()
        self.p: SlidingMap[Per] = SlidingMap()
        self.ls: dict[str, int] = {}
        self.sb: deque[McastMsg] = deque()

    def causal_send(self, dests: str | Iterable[str], payload: Any) -> list[WireMessage]:
        rcv = (dests,) if isinstance(dests, str) else tuple(sorted(set(dests)))
        if not rcv:
            raise ValueError("multicast needs at least one destination")
        if self.pid in rcv:
            raise ValueError(f"{self.pid}: self-sends are not supported")
        ls = self.ls
        pids = {j: ls.get(j, 0) for j in rcv}
        for j in rcv:
            ls[j] = self.ck
        m = McastMsg(rcv, self.ck, pids, self.p.next, payload, set(rcv))
        self.ck += 1
        self.sb.append(m)
        return self.try_send()

    def try_send(self) -> list[WireMessage]:
        out: list[WireMessage] = []
        sb, u = self.sb, self.u
        while sb:
            self.steps += 1
            m = sb[0]
            if self.p.first < m.per:
                break
            sb.popleft()
            m.needs_permit = len(u) > 0 or len(m.rcv) > 1
            if u.add(m) != m.mid - 1:
                raise ProtocolError(f"unacked slot does not match mid {m.mid}")
            for j in m.rcv:
                out.append(msg(self.pid, j, m.mid, m.pids[j], m.needs_permit, m.pl))
        return out

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
        self.p.add(Per(j, mid))

    def on_permit(self, j: str, n: int) -> list[WireMessage]:
        self.p.remove(Per(j, n))
        return self.try_send()

    def on_ack(self, j: str, n: int) -> list[WireMessage]:
        u = self.u
        k = n - 1
        if k < u.first:
            return [permit(self.pid, j, n)]
        if k >= u.next:
            self.anomalies += 1
            return []
        m = u[k]
        if j not in m.rcv:
            self.anomalies += 1
            return []
        m.unack.discard(j)
        if not m.unack:
            m.acked = True
            m.pl = None
        out: list[WireMessage] = []
        if k == u.first:
            while len(u):
                self.steps += 1
                m = u.peek()
                if not m.acked:
                    break
                if m.needs_permit:
                    out.extend(permit(self.pid, r, m.mid) for r in m.rcv)
                u.remove()
        return out

    def on_timer(self) -> list[WireMessage]:
        out = []
        for m in self.u:
            for j in sorted(m.unack):
                out.append(msg(self.pid, j, m.mid, m.pids[j], m.needs_permit, m.pl))
        out.extend(ack(self.pid, per.snd, per.mid) for per in self.p)
        return out

    def quiescent(self) -> bool:
        return not self.sb and not len(self.u) and not len(self.p) and not any(self.rb.values())

    @property
    def total_steps(self) -> int:
        return self.steps + self.u.steps + self.p.steps

    def send_buffer_size(self) -> int:
        return len(self.sb)

    def check_invariants(self) -> None:
        u = self.u
        for k in range(u.first, u.next):
            m = u[k]
            if m.mid != k + 1 or not m.unack <= set(m.rcv):
                raise ProtocolError(f"bad unacked entry at slot {k}: {m}")
            if m.acked != (not m.unack):
                raise ProtocolError(f"payload of {m.mid} cleared with acks outstanding")
        if len(u) and u.peek().acked:
            raise ProtocolError("fully acked message left at the head")
