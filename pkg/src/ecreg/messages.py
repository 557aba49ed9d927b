"""Protocol messages and their canonical byte serialization.

Every message travels between one client and one server; the direction
follows from the kind. Wire layout (little-endian, fixed width)::

    u8 kind | u32 client | u32 server | u64 op | u32 phase
    u8 tag_flag (0 none, 1 single-writer, 2 multi-writer) | u64 z | u32 writer
    u8 payload_flag (0 none, 1 replica, 2 coded) | u16 index | u32 len | bytes
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from .core import CodedSymbol, Payload, Replica, Tag


class Kind(IntEnum):
    GET_TAG = 1
    GET = 2
    PUT_REPLICA = 3
    PUT_CODED = 4
    FINALIZE = 5
    GET_TAG_RESP = 6
    GET_RESP = 7
    ACK = 8


REQUESTS = frozenset({Kind.GET_TAG, Kind.GET, Kind.PUT_REPLICA, Kind.PUT_CODED, Kind.FINALIZE})
PUTS = frozenset({Kind.PUT_REPLICA, Kind.PUT_CODED, Kind.FINALIZE})


@dataclass(frozen=True)
class Message:
    kind: Kind
    client: int
    server: int
    op: int  # correlation token of the client operation
    phase: int = 0  # phase / iteration number within the operation
    tag: Tag | None = None
    payload: Payload | None = None

    @property
    def to_server(self) -> bool:
        return self.kind in REQUESTS

    @property
    def channel(self) -> tuple[int, int, bool]:
        return (self.client, self.server, self.kind in REQUESTS)

    @property
    def payload_bytes(self) -> int:
        """Size of the value-bearing part; tags, indices and markers count zero."""
        p = self.payload
        if p is None:
            return 0
        return len(p.value) if isinstance(p, Replica) else len(p.data)

    def reply(self, kind: Kind, tag: Tag | None = None, payload: Payload | None = None) -> "Message":
        return Message(kind, self.client, self.server, self.op, self.phase, tag, payload)


_HEAD = struct.Struct("<BIIQI")
_TAG = struct.Struct("<BQI")
_PAY = struct.Struct("<BHI")


def encode_message(m: Message) -> bytes:
    parts = [_HEAD.pack(int(m.kind), m.client, m.server, m.op, m.phase)]
    if m.tag is None:
        parts.append(_TAG.pack(0, 0, 0))
    elif m.tag.writer is None:
        parts.append(_TAG.pack(1, m.tag.z, 0))
    else:
        parts.append(_TAG.pack(2, m.tag.z, m.tag.writer))
    p = m.payload
    if p is None:
        parts.append(_PAY.pack(0, 0, 0))
    elif isinstance(p, Replica):
        parts.append(_PAY.pack(1, 0, len(p.value)))
        parts.append(p.value)
    else:
        parts.append(_PAY.pack(2, p.index, len(p.data)))
        parts.append(p.data)
    return b"".join(parts)


def decode_message(raw: bytes) -> Message:
    kind, client, server, op, phase = _HEAD.unpack_from(raw, 0)
    off = _HEAD.size
    tflag, z, writer = _TAG.unpack_from(raw, off)
    off += _TAG.size
    tag = None if tflag == 0 else Tag(z) if tflag == 1 else Tag(z, writer)
    pflag, index, length = _PAY.unpack_from(raw, off)
    off += _PAY.size
    body = bytes(raw[off:off + length])
    if len(body) != length or off + length != len(raw):
        raise ValueError("truncated or oversized message")
    payload: Payload | None
    if pflag == 0:
        payload = None
    elif pflag == 1:
        payload = Replica(body)
    elif pflag == 2:
        payload = CodedSymbol(index, body)
    else:
        raise ValueError(f"unknown payload flag {pflag}")
    return Message(Kind(kind), client, server, op, phase, tag, payload)


def payload_to_json(p: Payload | None):
    if p is None:
        return None
    if isinstance(p, Replica):
        return {"replica": p.value.hex()}
    return {"coded": p.data.hex(), "index": p.index}


def payload_from_json(raw) -> Payload | None:
    if raw is None:
        return None
    if "replica" in raw:
        return Replica(bytes.fromhex(raw["replica"]))
    return CodedSymbol(int(raw["index"]), bytes.fromhex(raw["coded"]))


def message_to_json(m: Message) -> dict:
    return {
        "kind": m.kind.name,
        "client": m.client,
        "server": m.server,
        "op": m.op,
        "phase": m.phase,
        "tag": None if m.tag is None else m.tag.to_json(),
        "payload": payload_to_json(m.payload),
    }


def message_from_json(raw: dict) -> Message:
    return Message(
        Kind[raw["kind"]],
        int(raw["client"]),
        int(raw["server"]),
        int(raw["op"]),
        int(raw["phase"]),
        None if raw["tag"] is None else Tag.from_json(raw["tag"]),
        payload_from_json(raw["payload"]),
    )
