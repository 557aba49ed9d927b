"""Shared machinery for the client and server state machines.

Every machine is driven by the simulator one event at a time and returns a
:class:`Step` describing the messages it emits and, for clients, an optional
operation response. Machines never look at a clock and never block.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping

from ..codec import Codec
from ..core import CodedSymbol, Payload, Replica, StoredElement, SystemParams, Tag, initial_tag
from ..messages import Kind, Message

Entry = tuple[Tag, Payload]  # one (tag, element) response from a server


@dataclass
class Response:
    kind: str  # "write" | "read"
    value: bytes
    tag: Tag
    iterations: int = 1


@dataclass
class Step:
    sends: list[Message] = field(default_factory=list)
    response: Response | None = None
    aborted: bool = False


EMPTY = Step()


# -- read rules ---------------------------------------------------------------

def decodable_tags(responses: Mapping[int, Entry] | Iterable[tuple[int, Tag, Payload]], k: int) -> set[Tag]:
    """Tags recoverable from ``responses``: a replica, or >= k coded symbols with distinct indices."""
    if isinstance(responses, Mapping):
        items = [(s, t, p) for s, (t, p) in responses.items()]
    else:
        items = list(responses)
    out: set[Tag] = set()
    coded: dict[Tag, set[int]] = {}
    for _server, tag, payload in items:
        if isinstance(payload, Replica):
            out.add(tag)
        else:
            coded.setdefault(tag, set()).add(payload.index)
    out.update(t for t, idx in coded.items() if len(idx) >= k)
    return out


def returnable_tags(responses: Mapping[int, Entry], params: SystemParams) -> set[Tag]:
    """Decodable tags that also pass the safety test of the read protocol.

    A decodable tag qualifies if at least ``f+1`` responses carry it, or at
    most ``nu`` distinct tags strictly above it appear among the responses.
    """
    counts = Counter(t for t, _ in responses.values())
    distinct = sorted(counts)
    out = set()
    for t in decodable_tags(responses, params.k):
        if counts[t] >= params.f + 1:
            out.add(t)
        elif len(distinct) - 1 - distinct.index(t) <= params.nu:
            out.add(t)
    return out


def recover_value(entries: Iterable[Entry], tag: Tag, codec: Codec) -> bytes:
    """Reconstruct the value of ``tag`` from entries (all assumed to stem from one value)."""
    symbols = []
    for t, p in entries:
        if t != tag:
            continue
        if isinstance(p, Replica):
            return p.value
        symbols.append(p)
    return codec.decode(symbols)


# -- servers ------------------------------------------------------------------

class Server:
    """In-place (tag, element) store.

    ``coded_overwrites_equal`` selects the multi-writer rule where a coded
    put replaces a replica carrying the same tag; otherwise a put is only
    applied for a strictly larger tag.
    """

    def __init__(self, index: int, codec: Codec, initial: StoredElement, *, coded_overwrites_equal: bool):
        self.index = index
        self.codec = codec
        self.stored = initial
        self.coded_overwrites_equal = coded_overwrites_equal

    def deliver(self, msg: Message) -> list[Message]:
        kind = msg.kind
        stored = self.stored
        if kind is Kind.GET:
            return [msg.reply(Kind.GET_RESP, stored.tag, stored.payload)]
        if kind is Kind.GET_TAG:
            return [msg.reply(Kind.GET_TAG_RESP, stored.tag)]
        t = msg.tag
        if kind is Kind.PUT_REPLICA:
            if t > stored.tag:
                self.stored = StoredElement(t, msg.payload)
        elif kind is Kind.PUT_CODED:
            if msg.payload.index != self.index:
                raise ValueError(f"server {self.index} got symbol for index {msg.payload.index}")
            if t > stored.tag or (self.coded_overwrites_equal and t == stored.tag):
                self.stored = StoredElement(t, msg.payload)
        elif kind is Kind.FINALIZE:
            # Marker for a tag we hold as a replica: code it locally. A marker
            # for any other tag is acknowledged without a state change.
            if t == stored.tag and isinstance(stored.payload, Replica):
                self.stored = StoredElement(t, self.codec.encode_one(stored.payload.value, self.index))
        else:
            raise ValueError(f"server cannot handle {kind.name}")
        return [msg.reply(Kind.ACK, t)]


# -- clients ------------------------------------------------------------------

class Client:
    """Well-formed client: one outstanding operation, phases advance monotonically.

    Subclasses implement ``invoke`` and per-phase callbacks. A phase is a
    broadcast plus a threshold of distinct server replies; replies that do
    not match the current operation token and phase number are ignored.
    """

    role = "client"

    def __init__(self, cid: int, params: SystemParams, codec: Codec, *, multi_writer: bool):
        self.cid = cid
        self.params = params
        self.codec = codec
        self.multi_writer = multi_writer
        self.seq = 0
        self.op = 0
        self.phase = 0
        self.stage = "idle"
        self.need = 0
        self.replies: dict[int, Message] = {}
        self._on_quorum: Callable[[dict[int, Message]], Step] | None = None

    @property
    def idle(self) -> bool:
        return self.stage in ("idle", "done")

    @property
    def stuck(self) -> bool:
        """An aborted read leaves the client without a response forever."""
        return self.stage == "aborted"

    def _begin(self) -> None:
        if not self.idle:
            raise RuntimeError(f"client {self.cid} invoked while {self.stage}")
        self.seq += 1
        self.op = (self.cid << 32) | self.seq

    def _phase(self, stage: str, need: int, sends: Callable[[int], Iterable[Message]],
               on_quorum: Callable[[dict[int, Message]], Step]) -> list[Message]:
        self.phase += 1
        self.stage = stage
        self.need = need
        self.replies = {}
        self._on_quorum = on_quorum
        return list(sends(self.phase))

    def _msg(self, kind: Kind, server: int, phase: int, tag: Tag | None = None,
             payload: Payload | None = None) -> Message:
        return Message(kind, self.cid, server, self.op, phase, tag, payload)

    def _to_all(self, kind: Kind, tag: Tag | None = None,
                servers: Iterable[int] | None = None) -> Callable[[int], list[Message]]:
        targets = range(1, self.params.n + 1) if servers is None else servers
        return lambda ph: [self._msg(kind, s, ph, tag) for s in targets]

    def _finish(self, response: Response) -> Step:
        self.stage = "done"
        self._on_quorum = None
        return Step(response=response)

    def deliver(self, msg: Message) -> Step:
        if msg.op != self.op or msg.phase != self.phase or self._on_quorum is None:
            return EMPTY
        if msg.server in self.replies:
            return EMPTY
        self.replies[msg.server] = msg
        if len(self.replies) < self.need:
            return EMPTY
        cb, self._on_quorum = self._on_quorum, None
        return cb(self.replies)

    # shared sub-protocols

    def _initial_tag(self) -> Tag:
        return initial_tag(self.multi_writer)

    def _query(self, then: Callable[[Tag], Step]) -> list[Message]:
        """Collect stored tags from a quorum and hand ``(z_max + 1, cid)`` to ``then``."""
        def done(replies: dict[int, Message]) -> Step:
            z = max(m.tag.z for m in replies.values())
            return then(Tag(z + 1, self.cid))
        return self._phase("query", self.params.quorum, self._to_all(Kind.GET_TAG), done)

    def _put_coded_all(self, tag: Tag, value: bytes, then: Callable[[], Step]) -> list[Message]:
        symbols = self.codec.encode(value)
        return self._phase(
            "put", self.params.quorum,
            lambda ph: [self._msg(Kind.PUT_CODED, s.index, ph, tag, s) for s in symbols],
            lambda _r: then())

    def _put_replica_all(self, tag: Tag, value: bytes, then: Callable[[], Step]) -> list[Message]:
        rep = Replica(value)
        return self._phase(
            "put", self.params.quorum,
            lambda ph: [self._msg(Kind.PUT_REPLICA, s, ph, tag, rep) for s in range(1, self.params.n + 1)],
            lambda _r: then())


def initial_store(params: SystemParams, codec: Codec, multi_writer: bool, *, replicas: bool = False) -> list[StoredElement]:
    """Initial pair ``(0, Phi(v0)_s)`` for each server (or ``(0, v0)`` for replication)."""
    t0 = initial_tag(multi_writer)
    v0 = params.default_value()
    if replicas:
        return [StoredElement(t0, Replica(v0)) for _ in range(params.n)]
    return [StoredElement(t0, sym) for sym in codec.encode(v0)]


def as_entries(replies: Mapping[int, Message]) -> dict[int, Entry]:
    return {s: (m.tag, m.payload) for s, m in replies.items()}


def is_coded(p: Payload) -> bool:
    return isinstance(p, CodedSymbol)
