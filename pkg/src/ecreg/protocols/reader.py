"""Read protocol skeleton shared by every algorithm family.

A read collects ``(tag, element)`` pairs from a quorum, picks the largest
returnable tag, and writes it back before responding. In abort mode a read
with no returnable tag aborts and the client never responds again; in
retry mode the read starts another iteration, pooling responses across
iterations (see :mod:`ecreg.protocols.fw`).
"""

from __future__ import annotations

from ..core import CodedSymbol, Replica, Tag
from ..messages import Kind
from . import fw
from .base import Client, Entry, Response, Step, as_entries, recover_value, returnable_tags


class Reader(Client):
    role = "reader"

    def __init__(self, *args, retry: bool = False, **kwargs):
        super().__init__(*args, **kwargs)
        self.retry = retry
        self.pool: dict[int, list[Entry]] = {}
        self.gamma: Tag | None = None
        self.iterations = 0

    def invoke(self, value: bytes | None = None) -> Step:
        self._begin()
        self.pool = {}
        self.gamma = None
        self.iterations = 0
        return Step(self._get_round())

    def _get_round(self):
        self.iterations += 1
        return self._phase("get", self.params.quorum, self._to_all(Kind.GET), self._after_get)

    def choose(self, entries: dict[int, Entry]) -> Tag | None:
        ts = returnable_tags(entries, self.params)
        return max(ts) if ts else None

    def _after_get(self, replies) -> Step:
        entries = as_entries(replies)
        if not self.retry:
            t = self.choose(entries)
            if t is None:
                self.stage = "aborted"
                return Step(aborted=True)
            chosen = [e for e in entries.values() if e[0] == t]
        else:
            for s, e in entries.items():
                bucket = self.pool.setdefault(s, [])
                if not any(x[0] == e[0] and type(x[1]) is type(e[1]) for x in bucket):
                    bucket.append(e)
            if self.gamma is None:
                self.gamma = max(e[0] for e in entries.values())
            t = fw.select_tag(self.pool, self.params, self.gamma)
            if t is None:
                return Step(self._get_round())
            chosen = fw.pool_entries(self.pool, t)
        value = recover_value(chosen, t, self.codec)
        coded = sum(1 for _, p in chosen if isinstance(p, CodedSymbol))
        replicas = sum(1 for _, p in chosen if isinstance(p, Replica))
        return self.write_back(t, value, coded, replicas)

    def write_back(self, tag: Tag, value: bytes, coded_seen: int, replicas_seen: int) -> Step:
        raise NotImplementedError

    def _respond(self, tag: Tag, value: bytes) -> Step:
        return self._finish(Response("read", value, tag, self.iterations))
