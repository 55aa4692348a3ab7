"""Causal-delivery checker for simulator traces.

Only causal-send (``c``) and delivery (``d``) records matter. Consecutive
``c`` records of one process with the same message id form a single send
event (a multicast). Happened-before is computed with vector clocks; a
brute-force transitive closure over the explicit event graph is kept as an
independent cross-check for small traces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional

from .netsim import TraceLog, TraceRecord

BRUTE_FORCE_LIMIT = 200

MsgId = tuple[str, int]  # (sender, mid)


class OracleSizeError(ValueError):
    pass


class Violation(NamedTuple):
    tick: int
    receiver: str
    delivered: MsgId
    overtaken: MsgId  # sent causally before ``delivered``, not yet delivered
    kind: str = "causal"

    def describe(self) -> str:
        d, o = self.delivered, self.overtaken
        if self.kind == "causal":
            return (f"tick {self.tick}: {self.receiver} delivered {d[0]}:{d[1]} "
                    f"before {o[0]}:{o[1]} which happened-before it")
        return f"tick {self.tick}: {self.receiver} delivered {d[0]}:{d[1]} ({self.kind})"


@dataclass
class Verdict:
    violations: list[Violation] = field(default_factory=list)
    undelivered: list[tuple[MsgId, str]] = field(default_factory=list)
    sends: int = 0
    deliveries: int = 0

    @property
    def causal_ok(self) -> bool:
        return not self.violations

    @property
    def ok(self) -> bool:
        return not self.violations and not self.undelivered

    def to_text(self) -> str:
        lines = [
            f"verdict\t{'ok' if self.ok else 'fail'}",
            f"sends\t{self.sends}",
            f"deliveries\t{self.deliveries}",
            f"violations\t{len(self.violations)}",
            f"undelivered\t{len(self.undelivered)}",
        ]
        lines += [f"violation\t{v.describe()}" for v in self.violations]
        lines += [f"undelivered\t{m[0]}:{m[1]} -> {dst}" for m, dst in self.undelivered]
        return "\n".join(lines) + "\n"


@dataclass
class Stamps:
    """Per-message send info: vector clock, local event index, destinations."""
    clock: dict[MsgId, tuple[int, ...]]
    local: dict[MsgId, int]
    dests: dict[MsgId, list[str]]
    order: list[MsgId]
    procs: list[str]


def _processes(trace: Iterable[TraceRecord]) -> list[str]:
    names: set[str] = set()
    for _, proc, ev, _, peer in trace:
        if ev == "c" or ev == "d":
            names.add(proc)
            names.add(peer)
    return sorted(names)


def stamp_trace(trace: TraceLog) -> Stamps:
    """Vector-clock stamp of every send event in the trace."""
    procs = _processes(trace)
    pos = {p: i for i, p in enumerate(procs)}
    n = len(procs)
    vc = {p: [0] * n for p in procs}
    clock: dict[MsgId, tuple[int, ...]] = {}
    local: dict[MsgId, int] = {}
    dests: dict[MsgId, list[str]] = {}
    order: list[MsgId] = []
    for _, proc, ev, mid, peer in trace:
        if ev == "c":
            key = (proc, mid)
            if key in clock:
                dests[key].append(peer)  # further destinations of one multicast
                continue
            v = vc[proc]
            v[pos[proc]] += 1
            clock[key] = tuple(v)
            local[key] = v[pos[proc]]
            dests[key] = [peer]
            order.append(key)
        elif ev == "d":
            v = vc[proc]
            s = clock.get((peer, mid))
            if s is not None:
                vc[proc] = v = list(map(max, v, s))
            v[pos[proc]] += 1
    return Stamps(clock, local, dests, order, procs)


def vc_happened_before(stamps: Stamps) -> set[tuple[MsgId, MsgId]]:
    """All ordered pairs of sends (a, b) with a -> b, from vector clocks."""
    pos = {p: i for i, p in enumerate(stamps.procs)}
    out = set()
    for a in stamps.order:
        ia = pos[a[0]]
        la = stamps.local[a]
        for b in stamps.order:
            if a != b and stamps.clock[b][ia] >= la:
                out.add((a, b))
    return out


def brute_force_hb(trace: TraceLog) -> set[tuple[MsgId, MsgId]]:
    """Happened-before among sends by graph search over explicit event edges."""
    events: list[tuple[str, MsgId]] = []  # (kind, message)
    succ: list[list[int]] = []
    last_on: dict[str, int] = {}
    send_event: dict[MsgId, int] = {}
    pending_recv: dict[MsgId, list[int]] = {}
    for _, proc, ev, mid, peer in trace:
        if ev != "c" and ev != "d":
            continue
        key = (proc, mid) if ev == "c" else (peer, mid)
        if ev == "c" and key in send_event:
            continue
        idx = len(events)
        events.append((ev, key))
        succ.append([])
        prev = last_on.get(proc)
        if prev is not None:
            succ[prev].append(idx)
        last_on[proc] = idx
        if ev == "c":
            send_event[key] = idx
            if len(send_event) > BRUTE_FORCE_LIMIT:
                raise OracleSizeError(
                    f"brute-force closure limited to {BRUTE_FORCE_LIMIT} messages")
            for d in pending_recv.pop(key, []):
                succ[idx].append(d)
        else:
            s = send_event.get(key)
            if s is None:
                pending_recv.setdefault(key, []).append(idx)
            else:
                succ[s].append(idx)
    out = set()
    for a, start in send_event.items():
        seen = {start}
        stack = [start]
        while stack:
            e = stack.pop()
            for f in succ[e]:
                if f not in seen:
                    seen.add(f)
                    stack.append(f)
        for e in seen:
            kind, b = events[e]
            if kind == "c" and b != a:
                out.add((a, b))
    return out


def check(trace: TraceLog, expect_all_delivered: bool = True) -> Verdict:
    """Verify causal delivery (and, optionally, that every send was delivered)."""
    stamps = stamp_trace(trace)
    pos = {p: i for i, p in enumerate(stamps.procs)}
    # per (sender, receiver): local indices of sends, ascending, and a cursor
    # past the prefix already delivered
    chans: dict[tuple[str, str], list[int]] = {}
    chan_keys: dict[tuple[str, str], list[MsgId]] = {}
    for key in stamps.order:
        for q in stamps.dests[key]:
            chans.setdefault((key[0], q), []).append(stamps.local[key])
            chan_keys.setdefault((key[0], q), []).append(key)
    senders_to: dict[str, list[str]] = {}
    for (p, q) in chans:
        senders_to.setdefault(q, []).append(p)
    cursor = {c: 0 for c in chans}
    delivered: set[tuple[MsgId, str]] = set()
    verdict = Verdict(sends=len(stamps.order))
    for tick, q, ev, mid, peer in trace:
        if ev != "d":
            continue
        key = (peer, mid)
        verdict.deliveries += 1
        if key not in stamps.clock or q not in stamps.dests[key]:
            verdict.violations.append(Violation(tick, q, key, key, "never sent"))
            continue
        if (key, q) in delivered:
            verdict.violations.append(Violation(tick, q, key, key, "duplicate"))
            continue
        delivered.add((key, q))
        v = stamps.clock[key]
        for p in senders_to.get(q, ()):
            ch = (p, q)
            idxs = chans[ch]
            keys = chan_keys[ch]
            c = cursor[ch]
            while c < len(idxs) and (keys[c], q) in delivered:
                c += 1
            cursor[ch] = c
            if c < len(idxs) and idxs[c] <= v[pos[p]]:
                verdict.violations.append(Violation(tick, q, key, keys[c]))
    if expect_all_delivered:
        for key in stamps.order:
            for q in stamps.dests[key]:
                if (key, q) not in delivered:
                    verdict.undelivered.append((key, q))
    return verdict


def first_violation(trace: TraceLog) -> Optional[Violation]:
    v = check(trace, expect_all_delivered=False).violations
    return v[0] if v else None
