"""Built-in scenarios and the JSON scenario-file format.

A scenario bundles a process list, a network configuration, a default
engine and a script of timed causal-sends. Built-ins are referenced by
name; ``random`` takes parameters as ``random:seed=7,n=5,messages=2000``.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Optional

import jsonschema

from .netsim import ENGINES, Action, ConfigError, Latency, NetConfig


@dataclass
class Scenario:
    name: str
    processes: list[str]
    config: NetConfig
    script: list[Action]
    engine: str = "basic"
    # message of interest for residency reports, as (sender, mid)
    focus: Optional[tuple[str, int]] = None
    description: str = ""
    notes: dict[str, Any] = field(default_factory=dict)

    def with_overrides(self, seed: Optional[int] = None, tick_limit: Optional[int] = None,
                       engine: Optional[str] = None) -> "Scenario":
        cfg = self.config
        if seed is not None:
            cfg = replace(cfg, seed=seed)
        if tick_limit is not None:
            cfg = replace(cfg, tick_limit=tick_limit)
        return replace(self, config=cfg, engine=engine or self.engine)


def _links(pairs: dict[tuple[str, str], int]) -> dict[tuple[str, str], Latency]:
    """Symmetric fixed latencies from one-direction declarations."""
    out = {}
    for (a, b), t in pairs.items():
        out[(a, b)] = out[(b, a)] = Latency.fixed(t)
    return out


def fig2() -> Scenario:
    # j and k have slow side conversations, so their sends to i are eager /
    # need permits; c from k reaches i before a's permit or YCT, and is
    # delivered after m's causal-send
    procs = ["i", "j", "k", "X", "Y", "Z"]
    cfg = NetConfig(
        latency=Latency.fixed(100),
        link_latency=_links({("j", "X"): 400, ("k", "Y"): 200, ("k", "Z"): 600}),
        timer_period=5000,
    )
    script = [
        Action(0, "j", "X", "x1"),
        Action(0, "k", "Y", "y1"),
        Action(5, "k", "i", "b"),
        Action(10, "j", "i", "a"),
        Action(200, "i", "j", "m"),
        Action(300, "k", "Z", "z1"),
        Action(310, "k", "i", "c"),
    ]
    return Scenario("fig2", procs, cfg, script, "basic", focus=("i", 1),
                    description="i causal-sends m after delivering a (from j) and b (from k); "
                                "a concurrent c from k arrives before a's permit")


def cykas_starvation(periods: int = 55) -> Scenario:
    # j and k each pair a send to a bystander with an eager send to i; the
    # two streams are staggered so some YCT is always outstanding at i
    procs = ["i", "j", "k", "W", "V"]
    cfg = NetConfig(latency=Latency.fixed(100), timer_period=1000)
    script: list[Action] = []
    end = periods * cfg.timer_period
    t, n = 0, 0
    while t < end:
        script.append(Action(t, "j", "W", f"jw{n}"))
        script.append(Action(t + 10, "j", "i", f"ji{n}"))
        script.append(Action(t + 125, "k", "V", f"kv{n}"))
        script.append(Action(t + 135, "k", "i", f"ki{n}"))
        t += 250
        n += 1
    script.append(Action(1000, "i", "W", "m"))
    script.sort(key=lambda a: a.tick)
    return Scenario("cykas_starvation", procs, cfg, script, "cykas", focus=("i", 1),
                    description="two staggered eager streams into i keep its MODE positive",
                    notes={"m_causal_send": 1000})


def multicast_counterexample() -> Scenario:
    procs = ["i", "j", "k"]
    cfg = NetConfig(latency=Latency.fixed(100), link_latency=_links({("i", "k"): 500}))
    script = [
        Action(0, "i", ("j", "k"), "m"),
        Action(150, "j", "k", "m3"),  # after j delivers its copy of m at 100
    ]
    return Scenario("multicast_counterexample", procs, cfg, script, "multicast",
                    description="i multicasts m to j and k; j then sends m3 to k")


def pipeline(messages: int = 500, spacing: int = 10) -> Scenario:
    procs = ["p0", "p1", "p2", "p3"]
    cfg = NetConfig(latency=Latency.fixed(100))
    script = []
    for n in range(messages):
        for h in range(3):
            script.append(Action(n * spacing + h, procs[h], procs[h + 1], f"h{h}n{n}"))
    return Scenario("pipeline", procs, cfg, script, "basic",
                    description="chain of four processes under continuous load")


def single_pair(messages: int = 1000, spacing: int = 10, latency: int = 100) -> Scenario:
    cfg = NetConfig(latency=Latency.fixed(latency))
    script = [Action(n * spacing, "a", "b", f"n{n}") for n in range(messages)]
    return Scenario("single_pair", ["a", "b"], cfg, script, "basic",
                    description="one sender streaming to one receiver")


def random_scenario(seed: int = 0, n: int = 5, messages: int = 1000, loss: float = 0.0,
                    dup: float = 0.0, jitter: int = 0, multicast: float = 0.0,
                    spacing: int = 10) -> Scenario:
    """Random sends between ``n`` processes; gaps uniform in [0, 2 * spacing]."""
    if n < 2:
        raise ConfigError("random scenario needs at least 2 processes")
    rng = random.Random(seed)
    procs = [f"p{x}" for x in range(n)]
    script = []
    t = 0
    for x in range(messages):
        t += rng.randint(0, 2 * spacing)
        src = rng.choice(procs)
        others = [p for p in procs if p != src]
        if multicast and len(others) > 1 and rng.random() < multicast:
            dst: Any = tuple(sorted(rng.sample(others, rng.randint(2, len(others)))))
        else:
            dst = rng.choice(others)
        script.append(Action(t, src, dst, f"r{x}"))
    cfg = NetConfig(seed=seed, loss_prob=loss, dup_prob=dup, reorder_jitter=jitter)
    return Scenario(f"random:seed={seed},n={n},messages={messages}", procs, cfg, script,
                    "multicast" if multicast else "basic")


def random_fault_run(seed: int, multicast: float = 0.0, min_messages: int = 500,
                     max_messages: int = 5000) -> Scenario:
    """A randomized faulty run: n in [2, 10], loss <= 0.2, dup <= 0.1, jitter up to 3x latency."""
    rng = random.Random(f"fault-run:{seed}")
    n = rng.randint(2, 10)
    # log-uniform message count across the range
    messages = round(math.exp(rng.uniform(math.log(min_messages), math.log(max_messages))))
    return random_scenario(seed=seed, n=n, messages=messages, loss=rng.uniform(0, 0.2),
                           dup=rng.uniform(0, 0.1), jitter=rng.randint(100, 300),
                           multicast=multicast)


def same_receiver_flag() -> Scenario:
    """i sends two messages to j; j forwards to k after delivering the second."""
    procs = ["i", "j", "k"]
    cfg = NetConfig(latency=Latency.fixed(100))
    script = [Action(0, "i", "j", "a"), Action(1, "i", "j", "b"), Action(150, "j", "k", "c")]
    return Scenario("same_receiver_flag", procs, cfg, script, focus=("j", 1),
                    description="a message to the only receiver with unacked traffic "
                                "does not need a permit")


def same_receiver_permit() -> Scenario:
    """The permit for z to j should not wait for the ack of an earlier message to j."""
    procs = ["i", "j", "k"]
    cfg = NetConfig(latency=Latency.fixed(100), link_latency=_links({("i", "j"): 500}),
                    timer_period=5000)
    script = [Action(0, "i", "k", "y"), Action(1, "i", "j", "x"), Action(2, "i", "j", "z"),
              Action(600, "j", "k", "w")]
    return Scenario("same_receiver_permit", procs, cfg, script, focus=("j", 1),
                    description="permit sent once only acks to the same receiver are missing")


def own_permit_send() -> Scenario:
    """i may send to j while the only missing permits are j's own."""
    procs = ["i", "j", "k"]
    cfg = NetConfig(latency=Latency.fixed(100))
    script = [Action(0, "j", "k", "q"), Action(1, "j", "i", "a"), Action(150, "i", "j", "m")]
    return Scenario("own_permit_send", procs, cfg, script, focus=("i", 1),
                    description="missing permits from the destination itself do not block")


IMPROVEMENT_SCENARIOS = {1: same_receiver_flag, 2: same_receiver_permit, 3: own_permit_send}

BUILTINS: dict[str, Callable[..., Scenario]] = {
    "fig2": fig2,
    "cykas_starvation": cykas_starvation,
    "multicast_counterexample": multicast_counterexample,
    "pipeline": pipeline,
    "single_pair": single_pair,
    "same_receiver_flag": same_receiver_flag,
    "same_receiver_permit": same_receiver_permit,
    "own_permit_send": own_permit_send,
    "random": random_scenario,
}

RANDOM_PARAMS = {"seed": int, "n": int, "messages": int, "loss": float, "dup": float,
                  "jitter": int, "multicast": float, "spacing": int}


def parse_builtin(ref: str) -> Scenario:
    name, _, params = ref.partition(":")
    if name not in BUILTINS:
        raise ConfigError(f"unknown scenario {name!r}")
    kwargs: dict[str, Any] = {}
    if params:
        if name != "random":
            raise ConfigError(f"scenario {name!r} takes no parameters")
        for item in params.split(","):
            key, eq, val = item.partition("=")
            key = key.strip()
            if not eq or key not in RANDOM_PARAMS:
                raise ConfigError(f"bad random parameter {item!r}; known: {sorted(RANDOM_PARAMS)}")
            try:
                kwargs[key] = RANDOM_PARAMS[key](val)
            except ValueError as e:
                raise ConfigError(f"bad value for {key}: {val!r}") from e
    return BUILTINS[name](**kwargs)


_LATENCY = {
    "type": "object",
    "properties": {"min": {"type": "integer", "minimum": 1},
                   "mean": {"type": "integer", "minimum": 1},
                   "max": {"type": "integer", "minimum": 1}},
    "required": ["min", "mean", "max"],
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "engine": {"enum": sorted(ENGINES)},
        "processes": {"type": "array", "items": {"type": "string", "minLength": 1},
                      "minItems": 2, "uniqueItems": True},
        "network": {
            "type": "object",
            "properties": {
                "seed": {"type": "integer"},
                "latency": _LATENCY,
                "link_latency": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {"src": {"type": "string"}, "dst": {"type": "string"},
                                       **_LATENCY["properties"]},
                        "required": ["src", "dst", "min", "mean", "max"],
                        "additionalProperties": False,
                    },
                },
                "loss_prob": {"type": "number", "minimum": 0, "maximum": 1},
                "dup_prob": {"type": "number", "minimum": 0, "maximum": 1},
                "reorder_jitter": {"type": "integer", "minimum": 0},
                "max_loss_streak": {"type": "integer", "minimum": 1},
                "timer_period": {"type": "integer", "minimum": 1},
                "tick_limit": {"type": "integer", "minimum": 0},
            },
            "additionalProperties": False,
        },
        "script": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "tick": {"type": "integer", "minimum": 0},
                    "src": {"type": "string"},
                    "dst": {"oneOf": [
                        {"type": "string"},
                        {"type": "array", "items": {"type": "string"}, "minItems": 1,
                         "uniqueItems": True},
                    ]},
                    "payload": {"type": "string"},
                },
                "required": ["tick", "src", "dst"],
                "additionalProperties": False,
            },
        },
        "focus": {"type": "object",
                  "properties": {"src": {"type": "string"}, "mid": {"type": "integer", "minimum": 1}},
                  "required": ["src", "mid"], "additionalProperties": False},
    },
    "required": ["processes", "script"],
    "additionalProperties": False,
}


def from_dict(doc: dict, name: str = "file") -> Scenario:
    try:
        jsonschema.validate(doc, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"scenario {name}: {where}: {e.message}") from None
    net = dict(doc.get("network", {}))
    if "latency" in net:
        net["latency"] = Latency(**net["latency"])
    if "link_latency" in net:
        net["link_latency"] = {
            (x["src"], x["dst"]): Latency(x["min"], x["mean"], x["max"]) for x in net["link_latency"]}
    cfg = NetConfig(**net)
    script = [Action(a["tick"], a["src"], a["dst"] if isinstance(a["dst"], str) else tuple(a["dst"]),
                     a.get("payload", "")) for a in doc["script"]]
    focus = doc.get("focus")
    return Scenario(doc.get("name", name), list(doc["processes"]), cfg, script,
                    doc.get("engine", "basic"),
                    focus=(focus["src"], focus["mid"]) if focus else None)


def to_dict(sc: Scenario) -> dict:
    cfg = sc.config
    lat = lambda l: {"min": l.min, "mean": l.mean, "max": l.max}  # noqa: E731
    net: dict[str, Any] = {
        "seed": cfg.seed, "latency": lat(cfg.latency),
        "loss_prob": cfg.loss_prob, "dup_prob": cfg.dup_prob,
        "reorder_jitter": cfg.reorder_jitter, "max_loss_streak": cfg.max_loss_streak,
        "timer_period": cfg.timer_period,
    }
    if cfg.link_latency:
        net["link_latency"] = [{"src": s, "dst": d, **lat(l)}
                               for (s, d), l in sorted(cfg.link_latency.items())]
    if cfg.tick_limit is not None:
        net["tick_limit"] = cfg.tick_limit
    doc: dict[str, Any] = {
        "name": sc.name, "engine": sc.engine, "processes": sc.processes, "network": net,
        "script": [{"tick": a.tick, "src": a.src,
                    "dst": a.dst if isinstance(a.dst, str) else list(a.dst),
                    "payload": "" if a.payload is None else str(a.payload)} for a in sc.script],
    }
    if sc.focus:
        doc["focus"] = {"src": sc.focus[0], "mid": sc.focus[1]}
    return doc


def load(ref: str) -> Scenario:
    """Resolve a built-in name or a path to a JSON scenario file."""
    path = Path(ref)
    if path.suffix == ".json" or path.is_file():
        try:
            doc = json.loads(path.read_text())
        except OSError as e:
            raise ConfigError(f"cannot read scenario file {ref}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"scenario file {ref} is not valid JSON: {e}") from None
        return from_dict(doc, path.stem)
    return parse_builtin(ref)
