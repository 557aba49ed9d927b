"""Multi-writer register combining replication and coding.

A write queries tags, pre-writes full replicas to servers ``1..k+2f``
(awaiting ``k+f`` acks), then finalizes: coded symbols go to servers
``k+2f+1..N`` and, with markers enabled, a tag-only marker tells servers
``1..k+2f`` to replace their replica by their own coded symbol. Without
markers the finalize sends coded symbols to all ``N`` servers.

Markers rely on per-channel FIFO delivery: the marker to a server always
follows the same operation's replica on that channel. A read that skips
its own pre-write therefore finalizes with plain coded puts.
"""

from __future__ import annotations

from typing import Callable

from ..core import Replica, Tag
from ..messages import Kind
from .base import Client, Response, Step
from .reader import Reader


class _TwoPhasePut:
    markers: bool

    def _prewrite(self: Client, tag: Tag, value: bytes, then: Callable[[], Step]):
        rep = Replica(value)
        targets = range(1, self.params.prewrite_targets + 1)
        return self._phase(
            "prewrite", self.params.prewrite_acks,
            lambda ph: [self._msg(Kind.PUT_REPLICA, s, ph, tag, rep) for s in targets],
            lambda _r: Step(self._finalize(tag, value, then, markers=self.markers)))

    def _finalize(self: Client, tag: Tag, value: bytes, then: Callable[[], Step], *, markers: bool):
        symbols = self.codec.encode(value)
        split = self.params.prewrite_targets if markers else 0

        def sends(ph):
            out = [self._msg(Kind.FINALIZE, s, ph, tag) for s in range(1, split + 1)]
            out += [self._msg(Kind.PUT_CODED, y.index, ph, tag, y) for y in symbols[split:]]
            return out
        return self._phase("finalize", self.params.quorum, sends, lambda _r: then())


class HybridWriter(_TwoPhasePut, Client):
    role = "writer"

    def __init__(self, *args, markers: bool = True, **kwargs):
        kwargs.setdefault("multi_writer", True)
        super().__init__(*args, **kwargs)
        self.markers = markers

    def invoke(self, value: bytes | None = None) -> Step:
        self._begin()

        def after_query(tag: Tag) -> Step:
            return Step(self._prewrite(tag, value, lambda: self._finish(Response("write", value, tag))))
        return Step(self._query(after_query))


class HybridReader(_TwoPhasePut, Reader):
    def __init__(self, *args, markers: bool = True, **kwargs):
        kwargs.setdefault("multi_writer", True)
        super().__init__(*args, **kwargs)
        self.markers = markers

    def write_back(self, tag, value, coded_seen, replicas_seen):
        done = lambda: self._respond(tag, value)  # noqa: E731
        if coded_seen >= self.params.quorum:
            return self._respond(tag, value)
        if coded_seen >= 1:
            # A coded symbol for ``tag`` exists only after its pre-write completed.
            return Step(self._finalize(tag, value, done, markers=False))
        return Step(self._prewrite(tag, value, done))
