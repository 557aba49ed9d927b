"""Seeded discrete-event simulator for asynchronous message passing with crashes.

Logical time is the event sequence number. Channels are reliable and FIFO
per ``(client, server, direction)``; the scheduler picks, one step at a
time, which channel head to deliver or which idle client to let invoke its
next operation. A delivery policy (plain random or a named adversary)
ranks the enabled actions; with fairness on, any message that has been
pending for ``fairness_bound`` steps is delivered first, which turns
"eventually delivered" into a finite, checkable bound.

All randomness comes from ``Schedule.seed``: the same arguments always
produce the same trace, byte for byte.
"""

from __future__ import annotations

import json
import random
import struct
from collections import Counter, deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator

from .codec import Codec
from .core import Replica, SystemParams, Tag
from .messages import Kind, Message, message_from_json, message_to_json
from .protocols import Algorithm, build_reader, build_servers, build_writer, effective_params
from .protocols.base import Client, Server

DEFAULT_STEP_LIMIT = 1_000_000

POLICIES = ("random", "skew-quorum", "delay-finalize", "starve-reader")


class ConfigError(ValueError):
    pass


@dataclass
class CrashSpec:
    node: str  # "s<i>" or "c<id>"
    at: int  # scheduler step at which the crash fires
    partial: bool = False  # clients: crash inside the next send, emitting a random subset


@dataclass
class Schedule:
    seed: int = 0
    policy: str = "random"
    crashes: list[CrashSpec] = field(default_factory=list)
    fairness: bool = True
    fairness_bound: int | None = None


@dataclass
class Workload:
    writers: int = 1
    readers: int = 1
    writes_per_writer: int | None = 3  # None: keep writing until the step limit
    reads_per_reader: int = 3
    concurrency_cap: bool = False
    read_mode: str = "abort"  # "abort" | "retry"


def adversary_strategies() -> tuple[str, ...]:
    return POLICIES


def node_name(kind: str, ident: int) -> str:
    return f"{kind}{ident}"


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str  # invoke | send | deliver | drop | crash | respond | abort
    node: str
    msg: Message | None = None
    op: int | None = None
    op_kind: str | None = None
    value: bytes | None = None
    tag: Tag | None = None
    stored: tuple[Tag, str, int] | None = None  # server state after a delivery
    iterations: int | None = None

    @property
    def time(self) -> int:
        return self.seq

    def to_json(self) -> dict:
        out: dict = {"seq": self.seq, "time": self.seq, "kind": self.kind, "node": self.node}
        if self.msg is not None:
            out["msg"] = message_to_json(self.msg)
            out["op"] = self.msg.op
        if self.op is not None:
            out["op"] = self.op
        if self.op_kind is not None:
            out["op_kind"] = self.op_kind
        if self.value is not None:
            out["value"] = self.value.hex()
        if self.tag is not None:
            out["tag"] = self.tag.to_json()
        if self.stored is not None:
            t, kind, size = self.stored
            out["stored"] = {"tag": t.to_json(), "payload": kind, "bytes": size}
        if self.iterations is not None:
            out["iterations"] = self.iterations
        return out

    @classmethod
    def from_json(cls, raw: dict) -> "Event":
        msg = message_from_json(raw["msg"]) if "msg" in raw else None
        stored = None
        if "stored" in raw:
            s = raw["stored"]
            stored = (Tag.from_json(s["tag"]), s["payload"], int(s["bytes"]))
        return cls(
            seq=raw["seq"], kind=raw["kind"], node=raw["node"], msg=msg,
            op=None if msg is not None else raw.get("op"),
            op_kind=raw.get("op_kind"),
            value=bytes.fromhex(raw["value"]) if "value" in raw else None,
            tag=Tag.from_json(raw["tag"]) if "tag" in raw else None,
            stored=stored, iterations=raw.get("iterations"))

    @property
    def token(self) -> int | None:
        return self.msg.op if self.msg is not None else self.op


@dataclass
class Trace:
    algorithm: Algorithm
    params: SystemParams  # effective parameters (2f+1 servers for the baseline)
    config: dict
    initial: list[tuple[Tag, str, int]]
    events: list[Event]
    truncated: bool = False
    steps: int = 0

    @property
    def multi_writer(self) -> bool:
        return bool(self.config.get("multi_writer"))

    def header(self) -> dict:
        return {
            "kind": "header",
            "format": 1,
            "algorithm": self.algorithm.value,
            "params": self.params.as_dict(),
            "config": self.config,
            "initial": [{"tag": t.to_json(), "payload": k, "bytes": b} for t, k, b in self.initial],
        }

    def lines(self) -> Iterator[str]:
        dump = lambda d: json.dumps(d, separators=(",", ":"))  # noqa: E731
        yield dump(self.header())
        for e in self.events:
            yield dump(e.to_json())
        yield dump({"kind": "end", "truncated": self.truncated, "steps": self.steps})

    def to_jsonl(self) -> str:
        return "\n".join(self.lines()) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.lines():
                fh.write(line + "\n")

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Trace":
        it = (ln for ln in lines if ln.strip())
        head = json.loads(next(it))
        if head.get("kind") != "header":
            raise ValueError("trace must start with a header record")
        p = head["params"]
        params = SystemParams(p["n"], p["f"], p["nu"], p["value_size_bits"], reduce=False)
        events, truncated, steps = [], False, 0
        for ln in it:
            raw = json.loads(ln)
            if raw["kind"] == "end":
                truncated, steps = raw["truncated"], raw["steps"]
                break
            events.append(Event.from_json(raw))
        initial = [(Tag.from_json(x["tag"]), x["payload"], x["bytes"]) for x in head["initial"]]
        return cls(Algorithm(head["algorithm"]), params, head["config"], initial, events, truncated, steps)

    @classmethod
    def read(cls, path) -> "Trace":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)


def _stored_summary(server: Server) -> tuple[Tag, str, int]:
    p = server.stored.payload
    if isinstance(p, Replica):
        return (server.stored.tag, "replica", len(p.value))
    return (server.stored.tag, "coded", len(p.data))


def _make_value(rng: random.Random, size: int, cid: int, seq: int) -> bytes:
    body = bytearray(rng.getrandbits(8) for _ in range(size))
    stamp = struct.pack("<HH", cid & 0xFFFF, seq & 0xFFFF)
    body[: min(4, size)] = stamp[: min(4, size)]
    return bytes(body)


class Simulation:
    """One execution. Use :func:`run` unless you need to poke at internals."""

    def __init__(self, params: SystemParams, algorithm: Algorithm, schedule: Schedule,
                 workload: Workload, step_limit: int = DEFAULT_STEP_LIMIT, *, markers: bool = True):
        algorithm = Algorithm(algorithm)
        if schedule.policy not in POLICIES:
            raise ConfigError(f"unknown delivery policy {schedule.policy!r}; known: {', '.join(POLICIES)}")
        if workload.read_mode not in ("abort", "retry"):
            raise ConfigError(f"read_mode must be 'abort' or 'retry', not {workload.read_mode!r}")
        if algorithm is Algorithm.ALG1 and workload.writers != 1:
            raise ConfigError("the single-writer algorithm needs exactly one writer")
        if workload.read_mode == "retry" and not algorithm.supports_retry:
            raise ConfigError("retry reads are not defined for the replication baseline")
        if workload.writers < 0 or workload.readers < 0:
            raise ConfigError("client counts must be non-negative")
        self.algorithm = algorithm
        self.params = effective_params(algorithm, params)
        self.schedule = schedule
        self.workload = workload
        self.step_limit = step_limit
        self.markers = markers
        self.rng = random.Random(schedule.seed)
        self.multi_writer = algorithm.multi_writer_tags or (algorithm is Algorithm.ABD and workload.writers > 1)
        n = self.params.n
        self.codec = Codec(n, self.params.k, self.params.value_bytes)
        self.servers = {s.index: s for s in build_servers(algorithm, self.params, self.codec,
                                                            multi_writer=self.multi_writer)}
        self.clients: dict[int, Client] = {}
        self.remaining: dict[int, int | None] = {}
        retry = workload.read_mode == "retry"
        for cid in range(1, workload.writers + 1):
            self.clients[cid] = build_writer(algorithm, cid, self.params, self.codec,
                                             multi_writer=self.multi_writer, markers=markers)
            self.remaining[cid] = workload.writes_per_writer
        for cid in range(workload.writers + 1, workload.writers + workload.readers + 1):
            self.clients[cid] = build_reader(algorithm, cid, self.params, self.codec,
                                             multi_writer=self.multi_writer, retry=retry, markers=markers)
            self.remaining[cid] = workload.reads_per_reader
        for c in schedule.crashes:
            self._parse_node(c.node)
        n_clients = max(1, len(self.clients))
        self.fairness_bound = schedule.fairness_bound or 4 * n * (n_clients + 1)
        self.crashed: set[str] = set()
        self.armed: set[int] = set()  # clients with a pending partial crash
        self.channels: dict[tuple[int, int, bool], deque] = {}
        self.events: list[Event] = []
        self.step = 0
        self.truncated = False
        self.writes_ongoing: set[int] = set()
        self.reads_ongoing: dict[int, set[int]] = {}
        self.op_owner: dict[int, int] = {}
        self.pending_prewrite: Counter = Counter()
        self.answered: dict[tuple[int, int], Counter] = {}
        self.favored = set(self.rng.sample(range(1, n + 1), self.params.quorum))
        self.initial = [_stored_summary(self.servers[i]) for i in range(1, n + 1)]

    # -- bookkeeping --------------------------------------------------------

    def _parse_node(self, name: str) -> tuple[str, int]:
        kind, ident = name[:1], name[1:]
        if kind not in ("s", "c") or not ident.isdigit():
            raise ConfigError(f"bad node name {name!r}; use s<index> or c<id>")
        i = int(ident)
        if kind == "s" and not 1 <= i <= self.params.n:
            raise ConfigError(f"server {name} outside 1..{self.params.n}")
        if kind == "c" and i not in self.clients:
            raise ConfigError(f"unknown client {name}")
        return kind, i

    def _emit(self, kind: str, node: str, **kw) -> None:
        self.events.append(Event(len(self.events), kind, node, **kw))

    def _send(self, sender: str, msgs: list[Message]) -> None:
        for m in msgs:
            self._emit("send", sender, msg=m)
            dst = node_name("s", m.server) if m.to_server else node_name("c", m.client)
            if dst in self.crashed:
                self._emit("drop", dst, msg=m)
                continue
            if m.kind is Kind.PUT_REPLICA:
                self.pending_prewrite[m.op] += 1
            self.channels.setdefault(m.channel, deque()).append((self.step, m))

    def _crash(self, name: str) -> None:
        if name in self.crashed:
            return
        self.crashed.add(name)
        self._emit("crash", name)
        kind, i = self._parse_node(name)
        for key in list(self.channels):
            c, s, to_server = key
            if (kind == "s" and s == i and to_server) or (kind == "c" and c == i and not to_server):
                for _, m in self.channels.pop(key):
                    if m.kind is Kind.PUT_REPLICA:
                        self.pending_prewrite[m.op] -= 1
                    self._emit("drop", name, msg=m)
        if kind == "c":
            self.armed.discard(i)
            self.reads_ongoing.pop(self.clients[i].op, None)

    def _client_sends(self, cid: int, msgs: list[Message]) -> None:
        name = node_name("c", cid)
        if cid in self.armed and msgs:
            keep = self.rng.randrange(len(msgs))
            chosen = sorted(self.rng.sample(range(len(msgs)), keep))
            self._send(name, [msgs[i] for i in chosen])
            self.armed.discard(cid)
            self._crash(name)
            return
        self._send(name, msgs)

    # -- actions ------------------------------------------------------------

    def _can_invoke(self, cid: int) -> bool:
        client = self.clients[cid]
        if node_name("c", cid) in self.crashed or not client.idle:
            return False
        left = self.remaining[cid]
        if left is not None and left <= 0:
            return False
        nu = self.params.nu
        if client.role == "writer":
            if self.algorithm is Algorithm.ALG2A and len(self.writes_ongoing) >= nu - 1:
                return False
            if self.workload.concurrency_cap and any(len(w) >= nu - 1 for w in self.reads_ongoing.values()):
                return False
            return True
        return not (self.workload.concurrency_cap and len(self.writes_ongoing) > nu - 1)

    def _invoke(self, cid: int) -> None:
        client = self.clients[cid]
        if self.remaining[cid] is not None:
            self.remaining[cid] -= 1
        value = None
        if client.role == "writer":
            value = _make_value(self.rng, self.params.value_bytes, cid, client.seq + 1)
        step = client.invoke(value)
        op = client.op
        self.op_owner[op] = cid
        kind = "write" if client.role == "writer" else "read"
        self._emit("invoke", node_name("c", cid), op=op, op_kind=kind, value=value)
        if kind == "write":
            self.writes_ongoing.add(op)
            for overlap in self.reads_ongoing.values():
                overlap.add(op)
        else:
            self.reads_ongoing[op] = set(self.writes_ongoing)
        self._client_sends(cid, step.sends)

    def _deliver(self, key) -> None:
        chan = self.channels[key]
        _, m = chan.popleft()
        if not chan:
            del self.channels[key]
        if m.kind is Kind.PUT_REPLICA:
            self.pending_prewrite[m.op] -= 1
        if m.to_server:
            server = self.servers[m.server]
            out = server.deliver(m)
            self._emit("deliver", node_name("s", m.server), msg=m, stored=_stored_summary(server))
            if m.kind is Kind.GET:
                cnt = self.answered.setdefault((m.op, m.phase), Counter())
                cnt[server.stored.tag] += 1
            self._send(node_name("s", m.server), out)
            return
        cid = m.client
        client = self.clients[cid]
        self._emit("deliver", node_name("c", cid), msg=m)
        step = client.deliver(m)
        self._client_sends(cid, step.sends)
        if step.response is not None:
            r = step.response
            self._emit("respond", node_name("c", cid), op=client.op, op_kind=r.kind, value=r.value,
                       tag=r.tag, iterations=r.iterations if r.kind == "read" else None)
            if r.kind == "write":
                self.writes_ongoing.discard(client.op)
            else:
                self.reads_ongoing.pop(client.op, None)
            if cid in self.armed and self._finished(cid):
                self.armed.discard(cid)
                self._crash(node_name("c", cid))
        elif step.aborted:
            self._emit("abort", node_name("c", cid), op=client.op, op_kind="read")
            self.reads_ongoing.pop(client.op, None)

    def _finished(self, cid: int) -> bool:
        left = self.remaining[cid]
        return self.clients[cid].idle and left is not None and left <= 0

    # -- policies -----------------------------------------------------------

    def _held(self, m: Message) -> bool:
        policy = self.schedule.policy
        if policy == "skew-quorum":
            return m.server not in self.favored
        if policy == "delay-finalize":
            return m.kind in (Kind.FINALIZE, Kind.PUT_CODED) and self.pending_prewrite[m.op] > 0
        if policy == "starve-reader":
            if m.kind is not Kind.GET:
                return False
            # Hold the request if answering it now would make a tag decodable.
            stored = self.servers[m.server].stored
            if isinstance(stored.payload, Replica):
                return True
            seen = self.answered.get((m.op, m.phase))
            return (seen[stored.tag] if seen else 0) + 1 >= self.params.k
        return False

    def _choose(self, heads: list, invokers: list[int]):
        if self.schedule.policy == "random":
            pool = [("d", k) for k in heads] + [("i", c) for c in invokers]
            return pool[self.rng.randrange(len(pool))]
        preferred = [("d", k) for k in heads if not self._held(self.channels[k][0][1])]
        preferred += [("i", c) for c in invokers]
        if not preferred:
            preferred = [("d", k) for k in heads]
        return preferred[self.rng.randrange(len(preferred))]

    # -- main loop ----------------------------------------------------------

    def _fire_crashes(self) -> None:
        for c in self.schedule.crashes:
            if c.at == self.step and c.node not in self.crashed:
                kind, i = self._parse_node(c.node)
                if c.partial and kind == "c":
                    if self._finished(i) or self.clients[i].stuck:
                        self._crash(c.node)
                    else:
                        self.armed.add(i)
                else:
                    self._crash(c.node)

    def run(self) -> Trace:
        bound = self.fairness_bound
        late_crashes = max((c.at for c in self.schedule.crashes), default=-1)
        while True:
            self._fire_crashes()
            heads = list(self.channels)
            invokers = [cid for cid in self.clients if self._can_invoke(cid)]
            if not heads and not invokers:
                if self.step >= late_crashes:
                    break
                self.step += 1
                continue
            if self.step >= self.step_limit:
                self.truncated = True
                break
            action = None
            if self.schedule.fairness and heads:
                oldest = min(heads, key=lambda k: self.channels[k][0][0])
                if self.step - self.channels[oldest][0][0] >= bound:
                    action = ("d", oldest)
            if action is None:
                action = self._choose(heads, invokers)
            if action[0] == "d":
                self._deliver(action[1])
            else:
                self._invoke(action[1])
            self.step += 1
        config = {
            "algorithm": self.algorithm.value,
            "params": {"n": self.params.requested_n, "f": self.params.f, "nu": self.params.nu,
                       "value_size_bits": self.params.value_size_bits},
            "schedule": {**asdict(self.schedule), "fairness_bound": self.fairness_bound},
            "workload": asdict(self.workload),
            "step_limit": self.step_limit,
            "markers": self.markers,
            "multi_writer": self.multi_writer,
        }
        return Trace(self.algorithm, self.params, config, self.initial, self.events,
                     self.truncated, self.step)


def run(params: SystemParams, algorithm: Algorithm | str, schedule: Schedule, workload: Workload,
        step_limit: int = DEFAULT_STEP_LIMIT, *, markers: bool = True) -> Trace:
    """Execute one seeded run and return its full trace."""
    return Simulation(params, Algorithm(algorithm), schedule, workload, step_limit, markers=markers).run()


def steady_state_points(trace: Trace) -> list[int]:
    """Event indices after which the execution is at a steady-state point.

    No write is in progress at a live client, no read is in its write-back
    phase, and every put or marker sent by a completed operation to a live
    server has been delivered.
    """
    invoked: dict[int, str] = {}
    owner: dict[int, str] = {}
    done: set[int] = set()
    dead_ops: set[int] = set()
    crashed: set[str] = set()
    ongoing_writes: set[int] = set()
    writing_back: set[int] = set()
    inflight: Counter = Counter()  # (op, server node) -> undelivered puts to that server
    settled_by_op: Counter = Counter()  # op -> undelivered puts to live servers
    points = []
    for i, e in enumerate(trace.events):
        k = e.kind
        if k == "invoke":
            invoked[e.op] = e.op_kind
            owner[e.op] = e.node
            if e.op_kind == "write":
                ongoing_writes.add(e.op)
        elif k == "send" and e.msg.kind in (Kind.PUT_REPLICA, Kind.PUT_CODED, Kind.FINALIZE) and e.msg.to_server:
            dst = node_name("s", e.msg.server)
            if dst not in crashed:
                inflight[(e.msg.op, dst)] += 1
                settled_by_op[e.msg.op] += 1
            if invoked.get(e.msg.op) == "read" and e.msg.op not in done:
                writing_back.add(e.msg.op)
        elif k in ("deliver", "drop") and e.msg.kind in (Kind.PUT_REPLICA, Kind.PUT_CODED, Kind.FINALIZE) and e.msg.to_server:
            key = (e.msg.op, e.node)
            if inflight[key] > 0:
                inflight[key] -= 1
                settled_by_op[e.msg.op] -= 1
        elif k == "respond":
            done.add(e.op)
            ongoing_writes.discard(e.op)
            writing_back.discard(e.op)
        elif k == "crash":
            crashed.add(e.node)
            if e.node.startswith("s"):
                for key in [x for x in inflight if x[1] == e.node]:
                    settled_by_op[key[0]] -= inflight.pop(key)
            else:
                for op, who in owner.items():
                    if who == e.node and op not in done:
                        dead_ops.add(op)
                        ongoing_writes.discard(op)
                        writing_back.discard(op)
        steady = (not ongoing_writes and not writing_back
                  and all(settled_by_op[op] == 0 for op in done))
        if steady:
            points.append(i)
    return points
