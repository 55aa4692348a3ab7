"""Deterministic discrete-event network simulator with fault injection.

Time is integer ticks. Events are processed in ``(time, seq)`` order where
``seq`` is assigned when an event is scheduled, so a run is a pure function
of its configuration, process list, engine and script.

Faults are drawn per directed link from a generator seeded by
``(seed, src, dst)``; adding a link never perturbs the draws of another.
Loss is capped by ``max_loss_streak`` consecutive drops per link, which
makes "eventually some copy gets through" hold in every run.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, NamedTuple, Optional, Union

from .baselines import CykasProcess, MFProcess
from .basic import BasicProcess
from .multicast import MulticastProcess
from .sps_optimal import SpsOptimalProcess
from .wire import Kind, WireMessage, metadata_size

ENGINES = {
    "basic": BasicProcess,
    "sps_optimal": SpsOptimalProcess,
    "multicast": MulticastProcess,
    "mf": MFProcess,
    "cykas": CykasProcess,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Latency:
    min: int = 50
    mean: int = 100
    max: int = 150

    def __post_init__(self) -> None:
        if not 0 < self.min <= self.mean <= self.max:
            raise ConfigError(f"latency needs 0 < min <= mean <= max, got {self}")

    @classmethod
    def fixed(cls, ticks: int) -> "Latency":
        return cls(ticks, ticks, ticks)


@dataclass
class NetConfig:
    seed: int = 0
    latency: Latency = field(default_factory=Latency)
    link_latency: dict[tuple[str, str], Latency] = field(default_factory=dict)
    loss_prob: float = 0.0
    dup_prob: float = 0.0
    reorder_jitter: int = 0
    max_loss_streak: int = 3
    timer_period: int = 1000
    tick_limit: Optional[int] = None

    def __post_init__(self) -> None:
        for name in ("loss_prob", "dup_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {v}")
        if self.max_loss_streak < 1:
            raise ConfigError("max_loss_streak must be a positive integer")
        if self.timer_period < 1 or self.reorder_jitter < 0:
            raise ConfigError("timer_period must be positive and reorder_jitter non-negative")

    @property
    def faulty(self) -> bool:
        return self.loss_prob > 0 or self.dup_prob > 0 or self.reorder_jitter > 0

    @property
    def fifo_links(self) -> bool:
        """True when no link can reorder: fault-free and every latency fixed."""
        lats = [self.latency, *self.link_latency.values()]
        return not self.faulty and all(l.min == l.max for l in lats)

    def latency_for(self, src: str, dst: str) -> Latency:
        return self.link_latency.get((src, dst), self.latency)


Dest = Union[str, tuple[str, ...]]


class Action(NamedTuple):
    """A scripted causal-send: at ``tick``, ``src`` sends ``payload`` to ``dst``."""
    tick: int
    src: str
    dst: Dest
    payload: Any = None


DELIVER, TIMER, APP = 0, 1, 2


class SimEvent(NamedTuple):
    time: int
    seq: int
    kind: int
    data: Any


class TraceRecord(NamedTuple):
    tick: int
    process: str
    event: str
    mid: int
    peer: str


class TraceLog(list):
    """Append-only list of ``(tick, process, event, mid, peer)`` tuples.

    Events: ``c`` causal-send, ``s``/``r`` MSG network-send/receive,
    ``d`` delivery, ``ack``/``permit``/``yct`` control sends and
    ``rack``/``rpermit``/``ryct`` their receipts. ``mid`` is the id of the
    message the record is about, as numbered by its original sender.
    """

    def records(self) -> Iterator[TraceRecord]:
        return map(TraceRecord._make, self)

    def to_text(self) -> str:
        return "".join(f"{r[0]}\t{r[1]}\t{r[2]}\t{r[3]}\t{r[4]}\n" for r in self)

    @classmethod
    def from_text(cls, text: str) -> "TraceLog":
        log = cls()
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 5:
                raise ValueError(f"trace line {n}: expected 5 tab-separated fields")
            log.append((int(parts[0]), parts[1], parts[2], int(parts[3]), parts[4]))
        return log


def _link_seed(seed: int, src: str, dst: str) -> int:
    h = hashlib.sha256(f"{seed}\x00{src}\x00{dst}".encode()).digest()
    return int.from_bytes(h[:8], "big")


class Link:
    """Fault draws for one directed link."""

    __slots__ = ("rng", "lo", "hi", "mode", "loss", "dup", "jitter", "cap", "streak")

    def __init__(self, config: NetConfig, src: str, dst: str) -> None:
        lat = config.latency_for(src, dst)
        self.rng = random.Random(_link_seed(config.seed, src, dst))
        self.lo, self.hi = lat.min, lat.max
        self.mode = min(max(3 * lat.mean - lat.min - lat.max, lat.min), lat.max)
        self.loss = config.loss_prob
        self.dup = config.dup_prob
        self.jitter = config.reorder_jitter
        self.cap = config.max_loss_streak
        self.streak = 0

    def delays(self) -> tuple[int, ...]:
        """Transit delays of the copies that survive one send (0, 1 or 2 of them)."""
        rng = self.rng
        if self.loss and self.streak < self.cap and rng.random() < self.loss:
            self.streak += 1
            return ()
        self.streak = 0
        if self.dup and rng.random() < self.dup:
            return self._delay(), self._delay()
        return (self._delay(),)

    def _delay(self) -> int:
        rng = self.rng
        lo, hi = self.lo, self.hi
        if lo == hi:
            d = lo
        else:
            # inverse-CDF triangular draw
            u = rng.random()
            c = (self.mode - lo) / (hi - lo)
            if u < c:
                d = round(lo + ((hi - lo) * (self.mode - lo) * u) ** 0.5)
            else:
                d = round(hi - ((hi - lo) * (hi - self.mode) * (1 - u)) ** 0.5)
        if self.jitter:
            d += int(rng.random() * (self.jitter + 1))
        return d


def inject(links: dict, config: NetConfig, wire: WireMessage, now: int, seq: int) -> list[SimEvent]:
    """Deliver events for one network-send; ``seq`` numbers the first of them."""
    key = (wire.src, wire.dst)
    link = links.get(key)
    if link is None:
        link = links[key] = Link(config, wire.src, wire.dst)
    return [SimEvent(now + d, seq + i, DELIVER, wire) for i, d in enumerate(link.delays())]


_WIRE_NAMES = {k: k.name for k in Kind}


class LivenessFailure(RuntimeError):
    pass


@dataclass
class RunResult:
    trace: TraceLog
    quiescent: bool
    end_tick: int
    engine: str
    processes: dict[str, Any]
    wire_counts: dict[str, int]
    metadata_sizes: set[int]
    events: int

    @property
    def total_steps(self) -> int:
        return sum(p.total_steps for p in self.processes.values())

    @property
    def wire_events(self) -> int:
        return sum(self.wire_counts.values())


_EVENT_NAMES = {Kind.MSG: "s", Kind.ACK: "ack", Kind.PERMIT: "permit", Kind.YCT: "yct"}
_RECEIPT_NAMES = {Kind.MSG: "r", Kind.ACK: "rack", Kind.PERMIT: "rpermit", Kind.YCT: "ryct"}


class Simulator:
    def __init__(self, config: NetConfig, processes: Iterable[str], engine: str,
                 script: Iterable[Action], debug: bool = False,
                 drop: Optional[Callable[[WireMessage, int], bool]] = None) -> None:
        if engine not in ENGINES:
            raise ConfigError(f"unknown engine {engine!r}; choose from {sorted(ENGINES)}")
        if engine == "cykas" and not config.fifo_links:
            raise ConfigError("cykas requires FIFO links: no loss, duplication or jitter, "
                              "and fixed latencies")
        self.config = config
        self.engine = engine
        self.debug = debug
        # extra targeted loss on top of the random faults: drop(wire, now) -> bool
        self.drop = drop
        names = list(processes)
        if len(set(names)) != len(names):
            raise ConfigError("duplicate process names")
        cls = ENGINES[engine]
        self.procs = {name: cls(name, debug=debug) for name in names}
        self.multicast = getattr(cls, "supports_multicast", False)
        self.script = sorted(script, key=lambda a: a.tick)
        for a in self.script:
            dests = (a.dst,) if isinstance(a.dst, str) else a.dst
            unknown = {a.src, *dests} - set(names)
            if unknown:
                raise ConfigError(f"script references undeclared processes {sorted(unknown)}")
            if a.src in dests or not dests:
                raise ConfigError(f"bad destinations for action {a}")
        self.trace = TraceLog()
        self.links: dict[tuple[str, str], Link] = {}
        self.wire_counts = {"MSG": 0, "ACK": 0, "PERMIT": 0, "YCT": 0}
        self.metadata_sizes: set[int] = set()
        # (sender, protocol mid) -> application message id, only where they differ
        self.remap: dict[tuple[str, int], int] = {}
        self._heap: list[SimEvent] = []
        self._seq = 0
        self._pending = 0
        self.now = 0

    def _app_mid(self, sender: str, mid: int) -> int:
        return self.remap.get((sender, mid), mid) if self.remap else mid

    def _push(self, time: int, kind: int, data: Any) -> None:
        heapq.heappush(self._heap, (time, self._seq, kind, data))
        self._seq += 1

    def _emit(self, now: int, out: list[WireMessage]) -> None:
        # hot path: trace records and heap entries are plain tuples here
        append = self.trace.append
        counts = self.wire_counts
        links = self.links
        heap = self._heap
        remap = self.remap
        for w in out:
            kind, src, dst, mid = w[0], w[1], w[2], w[3]
            counts[_WIRE_NAMES[kind]] += 1
            owner = dst if kind == Kind.ACK else src
            if remap:
                mid = remap.get((owner, mid), mid)
            if kind == Kind.MSG:
                self.metadata_sizes.add(metadata_size(w))
            append((now, src, _EVENT_NAMES[kind], mid, dst))
            if self.drop is not None and self.drop(w, now):
                continue
            link = links.get((src, dst))
            if link is None:
                link = links[(src, dst)] = Link(self.config, src, dst)
            for d in link.delays():
                heapq.heappush(heap, (now + d, self._seq, DELIVER, w))
                self._seq += 1
                self._pending += 1

    def _app(self, now: int, a: Action) -> None:
        proc = self.procs[a.src]
        trace = self.trace
        if isinstance(a.dst, str) or len(a.dst) == 1:
            j = a.dst if isinstance(a.dst, str) else a.dst[0]
            out = proc.causal_send(j, a.payload)
            trace.append((now, a.src, "c", proc.ck - 1, j))
        elif self.multicast:
            out = proc.causal_send(a.dst, a.payload)
            mid = proc.ck - 1
            for j in sorted(a.dst):
                trace.append((now, a.src, "c", mid, j))
        else:
            # multicast simulated by a run of unicasts sharing one application id
            out = []
            app_mid = None
            for j in sorted(a.dst):
                out += proc.causal_send(j, a.payload)
                mid = proc.ck - 1
                if app_mid is None:
                    app_mid = mid
                else:
                    self.remap[(a.src, mid)] = app_mid
                trace.append((now, a.src, "c", app_mid, j))
        self._emit(now, out)

    def all_quiescent(self) -> bool:
        return all(p.quiescent() for p in self.procs.values())

    def run(self) -> RunResult:
        cfg = self.config
        last_action = self.script[-1].tick if self.script else 0
        limit = cfg.tick_limit if cfg.tick_limit is not None else last_action + 1000 * cfg.timer_period
        for a in self.script:
            self._push(a.tick, APP, a)
            self._pending += 1
        for name in self.procs:
            self._push(cfg.timer_period, TIMER, name)
        heap = self._heap
        procs = self.procs
        append = self.trace.append
        remap = self.remap
        events = 0
        now = 0
        quiescent = False
        while heap:
            if heap[0][0] > limit:
                break
            now, _, kind, data = heapq.heappop(heap)
            self.now = now
            events += 1
            if kind == DELIVER:
                self._pending -= 1
                w = data
                src, dst = w[1], w[2]
                proc = procs[dst]
                mid = w[3]
                if remap:
                    mid = remap.get((dst if w[0] == Kind.ACK else src, mid), mid)
                append((now, dst, _RECEIPT_NAMES[w[0]], mid, src))
                deliveries, out = proc.receive(w)
                if out:
                    self._emit(now, out)
                for d in deliveries:
                    mid = remap.get((d[0], d[1]), d[1]) if remap else d[1]
                    append((now, dst, "d", mid, d[0]))
            elif kind == TIMER:
                proc = procs[data]
                self._emit(now, proc.on_timer())
                self._push(now + cfg.timer_period, TIMER, data)
            else:
                self._pending -= 1
                proc = procs[data.src]
                self._app(now, data)
            if self.debug:
                proc.check_invariants()
            if self._pending == 0 and self.all_quiescent():
                quiescent = True
                break
        return RunResult(self.trace, quiescent, now, self.engine, procs, dict(self.wire_counts),
                         set(self.metadata_sizes), events)


def run(config: NetConfig, processes: Iterable[str], engine: str, script: Iterable[Action],
        debug: bool = False, drop: Optional[Callable[[WireMessage, int], bool]] = None) -> RunResult:
    """Execute ``script`` to quiescence or to the tick limit."""
    return Simulator(config, processes, engine, script, debug=debug, drop=drop).run()
