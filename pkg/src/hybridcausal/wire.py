"""Wire messages exchanged between protocol processes.

A MSG body carries exactly ``mid``, ``pid`` and one flag byte besides the
payload, so its metadata is a fixed 18 bytes whatever the number of
processes or the state of any buffer. Source and destination are transport
addressing and are not part of the body.
"""

from __future__ import annotations

import struct
from enum import IntEnum
from typing import Any, NamedTuple, Optional


class Kind(IntEnum):
    MSG = 1
    ACK = 2
    PERMIT = 3
    YCT = 4


class WireMessage(NamedTuple):
    kind: Kind
    src: str
    dst: str
    mid: int
    pid: int = 0
    needs_permit: bool = False
    payload: Any = None
    eager: bool = False  # Cykas only


class Delivery(NamedTuple):
    src: str
    mid: int
    payload: Any


_MSG_HEADER = struct.Struct("!BQQB")
_CTRL_HEADER = struct.Struct("!BQ")

FLAG_NEEDS_PERMIT = 0x01
FLAG_EAGER = 0x02


def msg(src: str, dst: str, mid: int, pid: int, needs_permit: bool, payload: Any,
        eager: bool = False) -> WireMessage:
    return WireMessage(Kind.MSG, src, dst, mid, pid, needs_permit, payload, eager)


def ack(src: str, dst: str, mid: int) -> WireMessage:
    return WireMessage(Kind.ACK, src, dst, mid)


def permit(src: str, dst: str, mid: int) -> WireMessage:
    return WireMessage(Kind.PERMIT, src, dst, mid)


def yct(src: str, dst: str, mid: int) -> WireMessage:
    # the mid is carried for tracing only; Cykas YCTs are anonymous
    return WireMessage(Kind.YCT, src, dst, mid)


def _payload_bytes(payload: Any) -> bytes:
    if payload is None:
        return b""
    if isinstance(payload, bytes):
        return payload
    return str(payload).encode("utf-8")


def _header(w: WireMessage) -> bytes:
    if w.kind == Kind.MSG:
        flags = (FLAG_NEEDS_PERMIT if w.needs_permit else 0) | (FLAG_EAGER if w.eager else 0)
        return _MSG_HEADER.pack(w.kind, w.mid, w.pid, flags)
    return _CTRL_HEADER.pack(w.kind, w.mid)


def encode(w: WireMessage) -> bytes:
    """Serialize the body of ``w`` (addressing excluded)."""
    if w.kind == Kind.MSG:
        return _header(w) + _payload_bytes(w.payload)
    return _header(w)


def decode(body: bytes, src: str, dst: str) -> WireMessage:
    kind = Kind(body[0])
    if kind == Kind.MSG:
        _, mid, pid, flags = _MSG_HEADER.unpack_from(body)
        payload: Optional[str] = body[_MSG_HEADER.size:].decode("utf-8") or None
        return WireMessage(kind, src, dst, mid, pid, bool(flags & FLAG_NEEDS_PERMIT), payload,
                           bool(flags & FLAG_EAGER))
    _, mid = _CTRL_HEADER.unpack_from(body)
    return WireMessage(kind, src, dst, mid)


def metadata_size(w: WireMessage) -> int:
    """Encoded body length minus payload length."""
    return len(_header(w))
