"""Atomicity, persistence and liveness checks over simulator traces.

Two independent atomicity oracles are provided. :func:`check_tag_atomicity`
uses the tags the protocols attach to operations: real-time order must
never contradict tag order, write tags must be distinct, and every read
must return the value written under its tag. :func:`brute_force_linearizable`
knows nothing about tags and searches for a legal sequential order of a
small history directly.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

from .core import Tag, initial_tag
from .messages import Kind
from .protocols import Algorithm
from .simulator import Trace

INF = float("inf")


class MalformedHistory(ValueError):
    pass


@dataclass(frozen=True)
class OperationRecord:
    op: int
    client: str
    kind: str  # "read" | "write"
    invoke_seq: int
    respond_seq: int | None = None
    value: bytes | None = None
    tag: Tag | None = None
    aborted: bool = False
    iterations: int | None = None

    @property
    def complete(self) -> bool:
        return self.respond_seq is not None

    @property
    def end(self) -> float:
        return INF if self.respond_seq is None else self.respond_seq


@dataclass
class Verdict:
    ok: bool
    prop: str | None = None
    detail: str = ""
    ops: tuple = ()
    dropped: int = 0

    def __bool__(self) -> bool:
        return self.ok

    def as_dict(self) -> dict:
        return {"ok": self.ok, "property": self.prop, "detail": self.detail,
                "ops": [hex(o) for o in self.ops], "dropped": self.dropped}


PASS = Verdict(True)


def history_from_trace(trace: Trace) -> list[OperationRecord]:
    """One record per invoked operation, in invocation order.

    An incomplete write gets the tag of its put messages if any were sent;
    incomplete and aborted reads carry no tag.
    """
    recs: dict[int, dict] = {}
    put_tag: dict[int, Tag] = {}
    for e in trace.events:
        if e.kind == "invoke":
            recs[e.op] = dict(op=e.op, client=e.node, kind=e.op_kind, invoke_seq=e.seq, value=e.value)
        elif e.kind == "send" and e.msg.kind in (Kind.PUT_REPLICA, Kind.PUT_CODED, Kind.FINALIZE):
            put_tag.setdefault(e.msg.op, e.msg.tag)
        elif e.kind == "respond":
            r = recs[e.op]
            r.update(respond_seq=e.seq, tag=e.tag, iterations=e.iterations)
            if r["kind"] == "read":
                r["value"] = e.value
        elif e.kind == "abort":
            recs[e.op]["aborted"] = True
    out = []
    for op, r in recs.items():
        if r["kind"] == "write" and r.get("tag") is None and op in put_tag:
            r["tag"] = put_tag[op]
        out.append(OperationRecord(**r))
    return out


def check_well_formed(history: Sequence[OperationRecord]) -> None:
    last_end: dict[str, float] = {}
    for o in sorted(history, key=lambda o: o.invoke_seq):
        if o.respond_seq is not None and o.respond_seq <= o.invoke_seq:
            raise MalformedHistory(f"operation {o.op:#x} responds before it is invoked")
        if o.invoke_seq < last_end.get(o.client, -1):
            raise MalformedHistory(f"client {o.client} has overlapping operations")
        last_end[o.client] = o.end


def check_tag_atomicity(history: Sequence[OperationRecord], v0: bytes, *,
                        multi_writer: bool | None = None) -> Verdict:
    """Tag-order atomicity test over completed operations.

    Writes that never completed but whose tag reached a server are kept with
    an open-ended interval, since a read may legitimately return their value.
    Reads that never completed are dropped.
    """
    check_well_formed(history)
    ops = [o for o in history if o.complete or (o.kind == "write" and o.tag is not None)]
    dropped = len(history) - len(ops)
    if multi_writer is None:
        tagged = next((o.tag for o in ops if o.tag is not None), None)
        multi_writer = bool(tagged is not None and tagged.multi)
    t0 = initial_tag(multi_writer)

    writes: dict[Tag, OperationRecord] = {}
    for o in ops:
        if o.kind != "write":
            continue
        if o.tag in writes:
            return Verdict(False, "distinct-write-tags", f"two writes carry tag {o.tag}",
                           (writes[o.tag].op, o.op), dropped)
        if o.tag == t0:
            return Verdict(False, "distinct-write-tags", "a write uses the initial tag", (o.op,), dropped)
        writes[o.tag] = o

    for o in ops:
        if o.kind != "read":
            continue
        if o.tag == t0:
            if o.value != v0:
                return Verdict(False, "read-value", "read with the initial tag returned a non-initial value",
                               (o.op,), dropped)
            continue
        w = writes.get(o.tag)
        if w is None:
            return Verdict(False, "read-value", f"read returned tag {o.tag} that no write used", (o.op,), dropped)
        if w.value != o.value:
            return Verdict(False, "read-value", f"read value differs from the value written under {o.tag}",
                           (w.op, o.op), dropped)
        if writes[o.tag].invoke_seq > o.respond_seq:
            return Verdict(False, "real-time", "read returned a write invoked after the read responded",
                           (w.op, o.op), dropped)

    # Sweep in time: each op must not be ordered before an op that finished
    # before it started, and a write must be strictly above all such ops.
    points = [(o.invoke_seq, 1, i) for i, o in enumerate(ops)]
    points += [(o.respond_seq, 0, i) for i, o in enumerate(ops) if o.complete]
    points.sort()
    best: Tag | None = None
    best_op = None
    for _, is_invoke, i in points:
        o = ops[i]
        if not is_invoke:
            if best is None or best < o.tag:
                best, best_op = o.tag, o.op
            continue
        if best is None:
            continue
        if o.kind == "write" and not best < o.tag:
            return Verdict(False, "real-time", f"write tag {o.tag} not above earlier completed tag {best}",
                           (best_op, o.op), dropped)
        if o.kind == "read" and o.complete and o.tag < best:
            return Verdict(False, "real-time", f"read tag {o.tag} below earlier completed tag {best}",
                           (best_op, o.op), dropped)
    return Verdict(True, dropped=dropped)


def brute_force_linearizable(history: Sequence[OperationRecord], v0: bytes, max_ops: int = 10) -> Verdict:
    """Search for a sequential register order consistent with real time.

    Completed operations must all appear; writes that never completed may or
    may not take effect. Incomplete reads are ignored.
    """
    ops = [o for o in history if o.complete or (o.kind == "write" and o.tag is not None)]
    if len(ops) > max_ops:
        raise ValueError(f"history has {len(ops)} operations, limit is {max_ops}")
    n = len(ops)
    inv = [o.invoke_seq for o in ops]
    end = [o.end for o in ops]
    required = sum(1 << i for i, o in enumerate(ops) if o.complete)

    @lru_cache(maxsize=None)
    def search(done: int, value: bytes) -> bool:
        if done & required == required:
            return True
        remaining = [i for i in range(n) if not done >> i & 1]
        horizon = min(end[i] for i in remaining)
        for i in remaining:
            if inv[i] > horizon:
                continue
            o = ops[i]
            if o.kind == "write":
                if search(done | 1 << i, o.value):
                    return True
            elif o.value == value and search(done | 1 << i, value):
                return True
        return False

    ok = search(0, v0)
    search.cache_clear()
    return PASS if ok else Verdict(False, "linearizability", "no legal sequential order exists")


# -- state scans ----------------------------------------------------------------

@dataclass
class ScanReport:
    ok: bool = True
    failures: list[str] = field(default_factory=list)
    checked_points: int = 0

    def fail(self, msg: str) -> None:
        self.ok = False
        if len(self.failures) < 20:
            self.failures.append(msg)


def _persistence_applies(trace: Trace) -> bool:
    alg = trace.algorithm
    if alg is Algorithm.ALG2:
        return False
    p = trace.params
    # With a single tolerated concurrent write, a coded register may spread
    # two tags too thin; the persistence guarantee is stated for nu >= 2.
    return p.k == 1 or p.nu >= 2


def scan_states(trace: Trace) -> ScanReport:
    """Replay server snapshots and assert the per-server and global invariants.

    Per server: stored tags never decrease, and within one tag a replica may
    become a coded symbol but never the reverse.

    Coded-only algorithms and replication: after a write with tag ``tw``
    completes, every ``N - f`` servers jointly hold a replica or ``k`` coded
    symbols of one tag ``>= tw``.

    Replicas-then-coding: the largest tag held by a live server is always
    recoverable from the live servers.
    """
    p = trace.params
    f, k = p.f, p.k
    state = {i + 1: (t, kind) for i, (t, kind, _b) in enumerate(trace.initial)}
    crashed: set[int] = set()
    tw: Tag | None = None
    report = ScanReport()
    persistence = _persistence_applies(trace)
    hybrid = trace.algorithm is Algorithm.ALG2
    for e in trace.events:
        changed = False
        if e.kind == "deliver" and e.stored is not None:
            s = int(e.node[1:])
            old_t, old_kind = state[s]
            t, kind, _ = e.stored
            if t < old_t:
                report.fail(f"seq {e.seq}: server {s} tag decreased {old_t} -> {t}")
            elif t == old_t and old_kind == "coded" and kind == "replica":
                report.fail(f"seq {e.seq}: server {s} turned a coded symbol back into a replica")
            changed = (t, kind) != (old_t, old_kind)
            state[s] = (t, kind)
        elif e.kind == "crash" and e.node.startswith("s"):
            crashed.add(int(e.node[1:]))
            changed = True
        elif e.kind == "respond" and e.op_kind == "write":
            tw = e.tag if tw is None or tw < e.tag else tw
            changed = True
        if not changed or len(crashed) > f:
            continue
        report.checked_points += 1
        if persistence and tw is not None:
            need_removed = 0
            holders: dict[Tag, Counter] = defaultdict(Counter)
            for s, (t, kind) in state.items():
                if not t < tw:
                    holders[t][kind] += 1
            for c in holders.values():
                need_removed += c["replica"] + max(0, c["coded"] - k + 1)
            if need_removed <= f:
                report.fail(f"seq {e.seq}: {need_removed} server removals hide every tag >= {tw}")
        if hybrid:
            live = {s: st for s, st in state.items() if s not in crashed}
            top = max(t for t, _ in live.values())
            kinds = Counter(kind for t, kind in live.values() if t == top)
            if not kinds["replica"] and kinds["coded"] < k:
                report.fail(f"seq {e.seq}: top live tag {top} has {kinds['coded']} coded symbols, no replica")
    return report


# -- liveness -------------------------------------------------------------------

def check_liveness(trace: Trace, history: Sequence[OperationRecord] | None = None, *,
                   reads: bool = True) -> Verdict:
    """Operations at clients that never crash must complete (vacuous if truncated)."""
    if trace.truncated:
        return Verdict(True, detail="truncated run; liveness not checked")
    history = history_from_trace(trace) if history is None else history
    crashed = {e.node for e in trace.events if e.kind == "crash"}
    servers_down = sum(1 for c in crashed if c.startswith("s"))
    if servers_down > trace.params.f:
        return Verdict(True, detail="more than f servers crashed; liveness not checked")
    for o in history:
        if o.complete or o.client in crashed:
            continue
        if o.kind == "write":
            return Verdict(False, "write-termination", "write at a live client never completed", (o.op,))
        if reads:
            why = "aborted" if o.aborted else "never completed"
            return Verdict(False, "read-termination", f"read at a live client {why}", (o.op,))
    return PASS


def aborts(history: Iterable[OperationRecord]) -> int:
    return sum(1 for o in history if o.aborted)


@dataclass
class TraceVerdict:
    atomicity: Verdict
    linearizable: Verdict | None
    states: ScanReport
    liveness: Verdict
    aborts: int

    @property
    def ok(self) -> bool:
        lin = self.linearizable is None or self.linearizable.ok
        return self.atomicity.ok and lin and self.states.ok and self.liveness.ok

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "atomicity": self.atomicity.as_dict(),
            "linearizable": None if self.linearizable is None else self.linearizable.as_dict(),
            "states": {"ok": self.states.ok, "failures": self.states.failures,
                       "checked_points": self.states.checked_points},
            "liveness": self.liveness.as_dict(),
            "aborts": self.aborts,
        }


def check_trace(trace: Trace, *, brute_force_limit: int = 10, read_liveness: bool = True) -> TraceVerdict:
    """Run every check over one trace."""
    history = history_from_trace(trace)
    v0 = trace.params.default_value()
    atom = check_tag_atomicity(history, v0, multi_writer=trace.multi_writer)
    considered = [o for o in history if o.complete or (o.kind == "write" and o.tag is not None)]
    lin = brute_force_linearizable(history, v0, brute_force_limit) if len(considered) <= brute_force_limit else None
    return TraceVerdict(atom, lin, scan_states(trace),
                        check_liveness(trace, history, reads=read_liveness), aborts(history))
