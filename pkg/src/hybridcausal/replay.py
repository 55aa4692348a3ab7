"""Replay one process's recorded inputs into fresh engine instances.

Comparing two engines in independent simulations also compares two
different causal histories: an engine that sends earlier makes receivers
deliver earlier, which can make their later causal-sends depend on more
messages. Replay removes that effect. A reference run records, for every
process, its timed inputs (causal-sends, arriving wire messages, timer
firings). Each candidate engine then gets exactly those inputs at exactly
those ticks, and we note when it first puts each message on the network.
"""

from __future__ import annotations

from typing import Any, Iterable, NamedTuple

from .netsim import ENGINES, Action, NetConfig, RunResult, Simulator
from .wire import Kind, WireMessage

UNICAST_ENGINES = ("basic", "sps_optimal")


class Input(NamedTuple):
    tick: int
    op: str  # "send", "wire" or "timer"
    arg: Any  # (dst, payload), a WireMessage, or None


class _Recorder:
    """Engine proxy that logs every input with the simulator's clock."""

    def __init__(self, sim: Simulator, inner: Any) -> None:
        self._sim = sim
        self._inner = inner
        self.inputs: list[Input] = []

    def causal_send(self, j: str, payload: Any) -> list[WireMessage]:
        self.inputs.append(Input(self._sim.now, "send", (j, payload)))
        return self._inner.causal_send(j, payload)

    def receive(self, w: WireMessage):
        self.inputs.append(Input(self._sim.now, "wire", w))
        return self._inner.receive(w)

    def on_timer(self) -> list[WireMessage]:
        self.inputs.append(Input(self._sim.now, "timer", None))
        return self._inner.on_timer()

    def __getattr__(self, name: str) -> Any:
        return getattr(self._inner, name)


def record(config: NetConfig, processes: Iterable[str], script: Iterable[Action],
           engine: str = "basic") -> tuple[RunResult, dict[str, list[Input]]]:
    """Run ``engine`` and return the result with every process's timed inputs."""
    if engine not in UNICAST_ENGINES:
        raise ValueError(f"replay supports {UNICAST_ENGINES}, not {engine!r}")
    sim = Simulator(config, processes, engine, script)
    recorders = {name: _Recorder(sim, p) for name, p in sim.procs.items()}
    sim.procs = recorders  # type: ignore[assignment]
    result = sim.run()
    return result, {name: r.inputs for name, r in recorders.items()}


def first_sends(name: str, inputs: list[Input], engine: str) -> dict[int, int]:
    """Feed ``inputs`` to a fresh ``engine`` process; map mid -> tick of its first MSG."""
    proc = ENGINES[engine](name)
    sent: dict[int, int] = {}
    for tick, op, arg in inputs:
        if op == "send":
            out = proc.causal_send(*arg)
        elif op == "wire":
            out = proc.receive(arg)[1]
        else:
            out = proc.on_timer()
        for w in out:
            if w.kind == Kind.MSG and w.mid not in sent:
                sent[w.mid] = tick
    return sent


def compare_send_ticks(config: NetConfig, processes: Iterable[str], script: Iterable[Action],
                       reference: str = "basic", candidate: str = "sps_optimal"
                       ) -> dict[tuple[str, int], tuple[int, int | None]]:
    """(process, mid) -> (reference send tick, candidate send tick or None) under replay."""
    _, inputs = record(config, processes, script, reference)
    out: dict[tuple[str, int], tuple[int, int | None]] = {}
    for name, seq in inputs.items():
        ref = first_sends(name, seq, reference)
        cand = first_sends(name, seq, candidate)
        for mid, tick in ref.items():
            out[(name, mid)] = (tick, cand.get(mid))
    return out
