"""Reference sender-buffering algorithms: MF and Cykas.

Both share the engine interface of the hybrid engines so they run under
the same simulator. MF tolerates loss through timer retransmission of its
single in-transit message. Cykas assumes a reliable network (its YCT
decrements are not idempotent) and must only be run without faults.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Any, Optional

from .basic import ProtocolError
from .sliding import SlidingArray
from .wire import Delivery, Kind, WireMessage, ack, msg, yct


@dataclass(slots=True)
class _Queued:
    rcv: str
    mid: int
    pl: Any


class MFProcess:
    """FIFO send buffer, one message in transit, next one released by its ack."""

    engine = "mf"

    def __init__(self, pid: str, debug: bool = False) -> None:
        self.pid = pid
        self.debug = debug
        self.ck = 1
        self.send_queue: deque[_Queued] = deque()
        self.in_transit: Optional[_Queued] = None
        self.ld: dict[str, int] = {}
        self.steps = 0
        self.anomalies = 0

    @property
    def awaiting_ack(self) -> bool:
        return self.in_transit is not None

    def causal_send(self, j: str, payload: Any) -> list[WireMessage]:
        if j == self.pid:
            raise ValueError(f"{self.pid}: self-sends are not supported")
        self.send_queue.append(_Queued(j, self.ck, payload))
        self.ck += 1
        return self._try_send()

    def _try_send(self) -> list[WireMessage]:
        if self.in_transit is not None or not self.send_queue:
            return []
        self.steps += 1
        m = self.in_transit = self.send_queue.popleft()
        return [msg(self.pid, m.rcv, m.mid, 0, False, m.pl)]

    def receive(self, w: WireMessage) -> tuple[list[Delivery], list[WireMessage]]:
        self.steps += 1
        if w.kind == Kind.MSG:
            reply = [ack(self.pid, w.src, w.mid)]
            if w.mid <= self.ld.get(w.src, 0):
                return [], reply
            self.ld[w.src] = w.mid
            return [Delivery(w.src, w.mid, w.payload)], reply
        if w.kind == Kind.ACK:
            m = self.in_transit
            if m is None or m.mid != w.mid:
                return [], []  # stale duplicate
            self.in_transit = None
            return [], self._try_send()
        raise ProtocolError(f"MF does not handle {w.kind!r}")

    def on_timer(self) -> list[WireMessage]:
        m = self.in_transit
        return [] if m is None else [msg(self.pid, m.rcv, m.mid, 0, False, m.pl)]

    def quiescent(self) -> bool:
        return self.in_transit is None and not self.send_queue

    @property
    def total_steps(self) -> int:
        return self.steps

    def send_buffer_size(self) -> int:
        return len(self.send_queue)

    def receive_buffer_size(self) -> int:
        return 0

    def check_invariants(self) -> None:
        pass


@dataclass(slots=True)
class _Sent:
    rcv: str
    mid: int
    eager: bool
    acked: bool = False
    yct_sent: bool = False


class CykasProcess:
    """Cykas: process-wide MODE counter, YCT control messages, no receive buffer.

    The rules, in the order they are usually stated:
    FIFO send buffer and immediate delivery; one in-transit message per
    destination; eager-send when any earlier send is unacked; MODE > 0 is
    secret mode; an eager receive increments MODE; nothing is released in
    secret mode; a YCT follows an eager-send once everything sent before
    it is acked; a YCT decrements MODE.
    """

    engine = "cykas"

    def __init__(self, pid: str, debug: bool = False) -> None:
        self.pid = pid
        self.debug = debug
        self.ck = 1
        self.mode = 0
        self.send_queue: deque[_Queued] = deque()
        self.unacked_to: set[str] = set()
        # sent messages in id order; the ack prefix tells when a YCT is due
        self.u: SlidingArray[_Sent] = SlidingArray()
        self.mode_log: list[int] = []
        self.steps = 0
        self.anomalies = 0

    @property
    def pending_acks(self) -> int:
        return sum(1 for s in self.u if not s.acked)

    def causal_send(self, j: str, payload: Any) -> list[WireMessage]:
        if j == self.pid:
            raise ValueError(f"{self.pid}: self-sends are not supported")
        self.send_queue.append(_Queued(j, self.ck, payload))
        self.ck += 1
        return self._try_send()

    def _try_send(self) -> list[WireMessage]:
        out: list[WireMessage] = []
        q = self.send_queue
        while q and self.mode == 0:
            self.steps += 1
            m = q[0]
            if m.rcv in self.unacked_to:
                break
            q.popleft()
            eager = len(self.u) > 0
            self.u.add(_Sent(m.rcv, m.mid, eager))
            self.unacked_to.add(m.rcv)
            out.append(msg(self.pid, m.rcv, m.mid, 0, False, m.pl, eager=eager))
        return out

    def receive(self, w: WireMessage) -> tuple[list[Delivery], list[WireMessage]]:
        self.steps += 1
        if w.kind == Kind.MSG:
            if w.eager:
                self.mode += 1
                self.mode_log.append(self.mode)
            return [Delivery(w.src, w.mid, w.payload)], [ack(self.pid, w.src, w.mid)]
        if w.kind == Kind.ACK:
            return [], self._on_ack(w.src, w.mid)
        if w.kind == Kind.YCT:
            if self.mode <= 0:
                raise ProtocolError(f"{self.pid}: YCT received in normal mode")
            self.mode -= 1
            self.mode_log.append(self.mode)
            return [], self._try_send()
        raise ProtocolError(f"Cykas does not handle {w.kind!r}")

    def _on_ack(self, j: str, n: int) -> list[WireMessage]:
        u = self.u
        # strict FIFO release means message n sits at slot n - 1
        k = n - 1
        if not u.first <= k < u.next:
            self.anomalies += 1
            return []
        u[k].acked = True
        self.unacked_to.discard(j)
        out: list[WireMessage] = []
        while len(u):
            self.steps += 1
            head = u.peek()
            if head.eager and not head.yct_sent:
                head.yct_sent = True
                out.append(yct(self.pid, head.rcv, head.mid))
            if not head.acked:
                break
            u.remove()
        out += self._try_send()
        return out

    def on_timer(self) -> list[WireMessage]:
        return []

    def quiescent(self) -> bool:
        return not self.send_queue and not len(self.u) and self.mode == 0

    @property
    def total_steps(self) -> int:
        return self.steps + self.u.steps

    def send_buffer_size(self) -> int:
        return len(self.send_queue)

    def receive_buffer_size(self) -> int:
        return 0

    def check_invariants(self) -> None:
        if self.mode < 0:
            raise ProtocolError("negative MODE")
