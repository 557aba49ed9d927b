"""Replication baseline: every server stores a full replica.

With ``multi_writer=False`` the writer increments a local counter, which
makes the machine behave exactly like the coded single-writer register
run with ``k = 1``. With ``multi_writer=True`` writers query tags first.
"""

from __future__ import annotations

from ..core import Tag
from .base import Client, Response, Step
from .reader import Reader


class ReplicaWriter(Client):
    role = "writer"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.z = 0

    def invoke(self, value: bytes | None = None) -> Step:
        self._begin()

        def put(tag: Tag) -> Step:
            return Step(self._put_replica_all(tag, value, lambda: self._finish(Response("write", value, tag))))
        if self.multi_writer:
            return Step(self._query(put))
        self.z += 1
        return put(Tag(self.z))


class ReplicaReader(Reader):
    def choose(self, entries):
        return max(t for t, _ in entries.values())

    def write_back(self, tag, value, coded_seen, replicas_seen):
        return Step(self._put_replica_all(tag, value, lambda: self._respond(tag, value)))
