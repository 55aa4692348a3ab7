"""Post-processing of traces into per-message timings and run aggregates."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from itertools import groupby
from typing import Iterable, Optional

from .netsim import RunResult, TraceLog

MESSAGE_COLUMNS = ["run_id", "mid", "src", "dst", "c_tick", "s_tick", "d_tick",
                   "residency", "latency"]
SUMMARY_COLUMNS = ["run_id", "engine", "quiescent", "messages", "deliveries", "end_tick",
                   "throughput", "mean_residency", "max_residency", "mean_latency",
                   "max_latency", "max_in_transit", "max_send_buffer", "max_receive_buffer",
                   "msg_sends", "acks", "permits", "ycts", "metadata_bytes", "steps",
                   "steps_per_wire_event"]


@dataclass
class MessageTiming:
    src: str
    mid: int
    dst: str
    c_tick: int
    s_tick: Optional[int] = None
    d_tick: Optional[int] = None

    @property
    def residency(self) -> Optional[int]:
        return None if self.s_tick is None else self.s_tick - self.c_tick

    @property
    def latency(self) -> Optional[int]:
        return None if self.d_tick is None else self.d_tick - self.c_tick


@dataclass
class RunMetrics:
    messages: dict[tuple[str, int, str], MessageTiming] = field(default_factory=dict)
    max_in_transit: dict[str, int] = field(default_factory=dict)
    max_send_buffer: int = 0
    max_receive_buffer: int = 0
    control_counts: dict[str, int] = field(default_factory=dict)
    msg_sends: int = 0
    metadata_bytes: Optional[int] = None
    steps: Optional[int] = None
    wire_events: Optional[int] = None
    engine: str = ""
    quiescent: Optional[bool] = None
    end_tick: int = 0

    @property
    def partial(self) -> bool:
        """Metrics of a run that did not reach quiescence cover only what happened."""
        return self.quiescent is False

    def timing(self, src: str, mid: int, dst: Optional[str] = None) -> MessageTiming:
        if dst is not None:
            return self.messages[(src, mid, dst)]
        return next(m for k, m in self.messages.items() if k[0] == src and k[1] == mid)

    def residency_interval(self, src: str, mid: int) -> tuple[int, Optional[int]]:
        m = self.timing(src, mid)
        return m.c_tick, m.s_tick

    @property
    def deliveries(self) -> int:
        return sum(1 for m in self.messages.values() if m.d_tick is not None)

    def throughput(self) -> float:
        """Deliveries per tick, from the first causal-send to the last delivery."""
        done = [m.d_tick for m in self.messages.values() if m.d_tick is not None]
        if not done:
            return 0.0
        start = min(m.c_tick for m in self.messages.values())
        span = max(done) - start
        return len(done) / span if span > 0 else float("inf")

    @property
    def steps_per_wire_event(self) -> Optional[float]:
        if self.steps is None or not self.wire_events:
            return None
        return self.steps / self.wire_events

    def _stat(self, attr: str) -> tuple[float, int]:
        vals = [getattr(m, attr) for m in self.messages.values()]
        vals = [v for v in vals if v is not None]
        if not vals:
            return 0.0, 0
        return sum(vals) / len(vals), max(vals)

    def message_rows(self, run_id: str) -> list[list]:
        rows = []
        for m in sorted(self.messages.values(), key=lambda m: (m.c_tick, m.src, m.mid, m.dst)):
            rows.append([run_id, m.mid, m.src, m.dst, m.c_tick, _blank(m.s_tick),
                         _blank(m.d_tick), _blank(m.residency), _blank(m.latency)])
        return rows

    def summary_row(self, run_id: str) -> list:
        mean_res, max_res = self._stat("residency")
        mean_lat, max_lat = self._stat("latency")
        spw = self.steps_per_wire_event
        return [
            run_id, self.engine, _blank(self.quiescent), len(self.messages), self.deliveries,
            self.end_tick, f"{self.throughput():.6f}", f"{mean_res:.2f}", max_res,
            f"{mean_lat:.2f}", max_lat, max(self.max_in_transit.values(), default=0),
            self.max_send_buffer, self.max_receive_buffer, self.msg_sends,
            self.control_counts.get("ack", 0), self.control_counts.get("permit", 0),
            self.control_counts.get("yct", 0), _blank(self.metadata_bytes), _blank(self.steps),
            "" if spw is None else f"{spw:.4f}",
        ]


def _blank(v) -> object:
    if v is None:
        return ""
    if isinstance(v, bool):
        return int(v)
    return v


def analyze(trace: TraceLog, result: Optional[RunResult] = None) -> RunMetrics:
    """Compute timings and aggregates; ``result`` adds step counts and metadata sizes."""
    rm = RunMetrics()
    msgs = rm.messages
    in_transit: dict[str, int] = {}
    max_transit = rm.max_in_transit
    unacked: set[tuple[str, int, str]] = set()
    send_buf = 0
    recv_buf = 0
    received: set[tuple[str, int, str]] = set()
    controls = {"ack": 0, "permit": 0, "yct": 0}
    for tick, group in groupby(trace, key=lambda r: r[0]):
        for _, proc, ev, mid, peer in group:
            if ev == "c":
                msgs[(proc, mid, peer)] = MessageTiming(proc, mid, peer, tick)
                send_buf += 1
            elif ev == "s":
                rm.msg_sends += 1
                key = (proc, mid, peer)
                m = msgs.get(key)
                if m is not None and m.s_tick is None:
                    m.s_tick = tick
                    send_buf -= 1
                    unacked.add(key)
                    in_transit[proc] = in_transit.get(proc, 0) + 1
            elif ev == "r":
                key = (peer, mid, proc)
                m = msgs.get(key)
                if m is not None and m.d_tick is None and key not in received:
                    received.add(key)
                    recv_buf += 1
            elif ev == "d":
                key = (peer, mid, proc)
                m = msgs.get(key)
                if m is not None and m.d_tick is None:
                    m.d_tick = tick
                    if key in received:
                        recv_buf -= 1
            elif ev == "rack":
                key = (proc, mid, peer)
                if key in unacked:
                    unacked.discard(key)
                    in_transit[proc] -= 1
            elif ev in controls:
                controls[ev] += 1
        # occupancy is sampled once the tick's events have all happened
        if send_buf > rm.max_send_buffer:
            rm.max_send_buffer = send_buf
        if recv_buf > rm.max_receive_buffer:
            rm.max_receive_buffer = recv_buf
        for p, n in in_transit.items():
            if n > max_transit.get(p, 0):
                max_transit[p] = n
        rm.end_tick = tick
    rm.control_counts = controls
    if result is not None:
        rm.engine = result.engine
        rm.quiescent = result.quiescent
        rm.steps = result.total_steps
        rm.wire_events = result.wire_events
        rm.end_tick = result.end_tick
        if result.metadata_sizes:
            rm.metadata_bytes = max(result.metadata_sizes)
    return rm


def write_csv(rows: Iterable[list], header: list[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
