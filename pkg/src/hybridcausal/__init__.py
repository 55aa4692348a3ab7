"""Causal message delivery via hybrid buffering, plus a deterministic simulator to exercise it."""

from .basic import BasicProcess, ProtocolError
from .multicast import MulticastProcess
from .netsim import ENGINES, Action, ConfigError, Latency, NetConfig, RunResult, TraceLog, run
from .sps_optimal import SpsOptimalProcess
from .baselines import CykasProcess, MFProcess

__all__ = [
    "Action", "BasicProcess", "ConfigError", "CykasProcess", "ENGINES", "Latency",
    "MFProcess", "MulticastProcess", "NetConfig", "ProtocolError", "RunResult",
    "SpsOptimalProcess", "TraceLog", "run",
]
