"""Single-writer coded register and its bounded-concurrency multi-writer variant.

Every server holds one coded symbol at all times. The single writer
increments a local counter; the multi-writer variant first queries a
quorum for the largest stored tag. Reads write back coded symbols to all
servers before returning.
"""

from __future__ import annotations

from ..core import Tag
from .base import Client, Response, Step
from .reader import Reader


class CodedWriter(Client):
    """Single writer: ``t <- t + 1``, put ``Phi(v)_s`` to every ``s``, await a quorum."""

    role = "writer"

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("multi_writer", False)
        super().__init__(*args, **kwargs)
        self.z = 0

    def invoke(self, value: bytes | None = None) -> Step:
        self._begin()
        self.z += 1
        tag = Tag(self.z)
        return Step(self._put_coded_all(tag, value, lambda: self._finish(Response("write", value, tag))))


class QueryCodedWriter(Client):
    """Multi-writer with fewer than ``nu`` concurrent writes: query, then one coded put."""

    role = "writer"

    def __init__(self, *args, **kwargs):
        kwargs.setdefault("multi_writer", True)
        super().__init__(*args, **kwargs)

    def invoke(self, value: bytes | None = None) -> Step:
        self._begin()

        def put(tag: Tag) -> Step:
            return Step(self._put_coded_all(tag, value, lambda: self._finish(Response("write", value, tag))))
        return Step(self._query(put))


class CodedReader(Reader):
    def write_back(self, tag, value, coded_seen, replicas_seen):
        return Step(self._put_coded_all(tag, value, lambda: self._respond(tag, value)))
