"""Basic unicast causal delivery: CSPS enforced at the sender, FIFO at the receiver.

Each ``BasicProcess`` is a single-threaded state machine. Handlers return
the wire messages to hand to the transport; ``receive`` also returns the
payloads delivered to the application, in delivery order.

Message ids start at 1 so that 0 can stand for "no predecessor" and
"nothing delivered yet". A sent message with id ``mid`` lives in the
unacked sliding array at index ``mid - 1``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, NamedTuple, Optional

from .sliding import SlidingArray, SlidingMap
from .wire import Delivery, Kind, WireMessage, ack, msg, permit


class ProtocolError(AssertionError):
    """Raised when state could only have been reached by corrupted input."""


class Per(NamedTuple):
    """A missing permit: delivered message ``mid`` from ``snd``."""
    snd: str
    mid: int


class Rcv(NamedTuple):
    mid: int
    pl: Any
    per: bool


@dataclass(slots=True)
class Msg:
    rcv: str
    mid: int
    pid: int
    per: int  # permit index, fixed at causal-send time
    pl: Any
    needs_permit: Optional[bool] = None  # None until network-sent
    acked: bool = False

    @property
    def sent(self) -> bool:
        return self.needs_permit is not None


class Receiver:
    """Receive side shared by all hybrid engines: FIFO by predecessor chaining."""

    def __init__(self, pid: str, debug: bool = False) -> None:
        self.pid = pid
        self.debug = debug
        self.ld: dict[str, int] = {}
        self.rb: dict[str, dict[int, Rcv]] = {}
        self.steps = 0
        self.anomalies = 0

    def _add_permit(self, j: str, mid: int) -> None:
        raise NotImplementedError

    def _on_msg(self, w: WireMessage) -> tuple[list[Delivery], list[WireMessage]]:
        j = w.src
        last = self.ld.get(j, 0)
        if w.mid <= last:
            return [], [ack(self.pid, j, w.mid)]
        e = self.rb.get(j)
        if e is None:
            e = self.rb[j] = {}
        prev = e.get(w.pid)
        if prev is not None and prev.mid != w.mid:
            raise ProtocolError(f"{self.pid}: two messages from {j} claim predecessor {w.pid}")
        e[w.pid] = Rcv(w.mid, w.payload, w.needs_permit)
        deliveries: list[Delivery] = []
        out: list[WireMessage] = []
        while last in e:
            self.steps += 1
            b = e.pop(last)
            last = b.mid
            if b.per:
                self._add_permit(j, b.mid)
            out.append(ack(self.pid, j, b.mid))
            deliveries.append(Delivery(j, b.mid, b.pl))
        self.ld[j] = last
        return deliveries, out

    def receive_buffer_size(self) -> int:
        return sum(len(e) for e in self.rb.values())


class BasicProcess(Receiver):
    """Basic CSPS + FIFO engine for one process."""

    engine = "basic"

    def __init__(self, pid: str, debug: bool = False) -> None:
        super().__init__(pid, debug)
        self.ck = 1
        self.u: SlidingArray[Msg] = SlidingArray()
        self.p: SlidingMap[Per] = SlidingMap()
        self.ls: dict[str, int] = {}
        self.sb: deque[Msg] = deque()

    # -- sending -------------------------------------------------------

    def causal_send(self, j: str, payload: Any) -> list[WireMessage]:
        if j == self.pid:
            raise ValueError(f"{self.pid}: self-sends are not supported")
        m = Msg(j, self.ck, self.ls.get(j, 0), self.p.next, payload)
        self.ls[j] = self.ck
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
            m.needs_permit = len(u) > 0
            k = u.add(m)
            if k != m.mid - 1:
                raise ProtocolError(f"unacked slot {k} does not match mid {m.mid}")
            out.append(msg(self.pid, m.rcv, m.mid, m.pid, m.needs_permit, m.pl))
        return out

    # -- receiving -----------------------------------------------------

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

    def on_ack(self, j: str, n: int) -> list[WireMessage]:
        u = self.u
        k = n - 1
        if k < u.first:
            return [permit(self.pid, j, n)]
        if k >= u.next:
            self.anomalies += 1
            return []
        m = u[k]
        m.acked = True
        m.pl = None
        out: list[WireMessage] = []
        if k == u.first:
            u.remove()
            while len(u):
                self.steps += 1
                m = u.peek()
                if m.needs_permit:
                    if self.debug:
                        self._check_permit_guard(m)
                    out.append(permit(self.pid, m.rcv, m.mid))
                if not m.acked:
                    break
                u.remove()
        return out

    def _check_permit_guard(self, m: Msg) -> None:
        # every message sent before m must already be acked
        if m.mid - 1 != self.u.first:
            raise ProtocolError(f"permit for {m.mid} while earlier messages are unacked")

    def on_permit(self, j: str, n: int) -> list[WireMessage]:
        self.p.remove(Per(j, n))
        return self.try_send()

    def on_timer(self) -> list[WireMessage]:
        out = [msg(self.pid, m.rcv, m.mid, m.pid, m.needs_permit, m.pl)
               for m in self.u if not m.acked]
        out.extend(ack(self.pid, per.snd, per.mid) for per in self.p)
        return out

    # -- introspection -------------------------------------------------

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
            if u[k].mid != k + 1:
                raise ProtocolError(f"slot {k} holds mid {u[k].mid}")
        if len(u) and u.peek().acked:
            raise ProtocolError("acked message left at the head of the unacked buffer")
        for m in self.sb:
            if m.per > self.p.next:
                raise ProtocolError(f"buffered {m.mid} waits on permit index beyond next")
        for j, e in self.rb.items():
            if any(key < self.ld.get(j, 0) for key in e):
                raise ProtocolError(f"receive buffer for {j} holds a stale entry")
