"""Storage and communication costs, measured from traces and in closed form.

One unit is the size of one value. Costs only count value-bearing
payloads (replicas and coded symbols); tags, indices, markers and acks are
free. All quantities are exact :class:`fractions.Fraction` values, and
``None`` stands for an unbounded closed form.
"""

from __future__ import annotations

import csv
import io
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction

from .core import SystemParams
from .protocols import Algorithm, effective_params
from .simulator import Trace, steady_state_points

COMPARISON_ROWS = ("alg1", "alg2a", "alg2", "abd", "casgc", "scck")
LABELS = {"alg1": "Alg 1", "alg2a": "Alg 2-A", "alg2": "Alg 2", "abd": "ABD",
          "casgc": "CASGC", "scck": "SCCK"}


@dataclass(frozen=True)
class Costs:
    worst_storage: Fraction | None
    steady_storage: Fraction | None
    write_comm: Fraction | None
    read_comm: Fraction | None

    def fields(self) -> tuple:
        return (self.worst_storage, self.steady_storage, self.write_comm, self.read_comm)


@dataclass
class CostReport:
    worst_case_storage: Fraction
    steady_state_storage: Fraction | None
    steady_consistent: bool
    write_comm_max: Fraction | None
    read_comm_max: Fraction | None
    expected: Costs
    read_comm_bound: Fraction | None  # tight upper bound on a read's cost for this algorithm

    def as_dict(self) -> dict:
        s = lambda x: None if x is None else str(x)  # noqa: E731
        return {
            "worst_case_storage": s(self.worst_case_storage),
            "steady_state_storage": s(self.steady_state_storage),
            "steady_consistent": self.steady_consistent,
            "write_comm_max": s(self.write_comm_max),
            "read_comm_max": s(self.read_comm_max),
            "read_comm_bound": s(self.read_comm_bound),
            "expected": dict(zip(("worst_storage", "steady_storage", "write_comm", "read_comm"),
                                 map(s, self.expected.fields()))),
        }


def storage_profile(trace: Trace) -> list[Fraction]:
    """Total storage after each event (index-aligned with ``trace.events``)."""
    unit = trace.params.value_bytes
    sizes = {i + 1: b for i, (_t, _k, b) in enumerate(trace.initial)}
    total = sum(sizes.values())
    out = []
    for e in trace.events:
        if e.kind == "deliver" and e.stored is not None:
            s = int(e.node[1:])
            total += e.stored[2] - sizes[s]
            sizes[s] = e.stored[2]
        out.append(Fraction(total, unit))
    return out


def measure_storage(trace: Trace) -> tuple[Fraction, Fraction | None, bool]:
    """``(worst, steady, consistent)``.

    Crashed servers keep counting with whatever they held. ``steady`` is the
    largest total over steady-state points (None if there are none) and
    ``consistent`` says whether all steady points agree.
    """
    profile = storage_profile(trace)
    initial = Fraction(sum(b for *_x, b in trace.initial), trace.params.value_bytes)
    worst = max(profile, default=initial)
    worst = max(worst, initial)
    if not trace.events:
        return worst, initial, True
    steady = {profile[i] for i in steady_state_points(trace)}
    if not steady:
        return worst, None, True
    return worst, max(steady), len(steady) == 1


def comm_by_operation(trace: Trace) -> dict[int, tuple[str, bool, Fraction]]:
    """``op -> (kind, completed, units sent)`` counting every send tied to the op."""
    unit = trace.params.value_bytes
    kinds: dict[int, str] = {}
    done: set[int] = set()
    sent: dict[int, int] = defaultdict(int)
    for e in trace.events:
        if e.kind == "invoke":
            kinds[e.op] = e.op_kind
        elif e.kind == "respond":
            done.add(e.op)
        elif e.kind == "send":
            sent[e.msg.op] += e.msg.payload_bytes
    return {op: (k, op in done, Fraction(sent[op], unit)) for op, k in kinds.items()}


def measure_comm(trace: Trace) -> tuple[Fraction | None, Fraction | None]:
    """Largest per-operation cost among completed writes and completed reads."""
    best: dict[str, Fraction] = {}
    for kind, completed, units in comm_by_operation(trace).values():
        if completed and (kind not in best or units > best[kind]):
            best[kind] = units
    return best.get("write"), best.get("read")


def expected_costs(params: SystemParams, algorithm: Algorithm | str, *, markers: bool = True) -> Costs:
    """Closed-form worst-case costs for one row of the comparison table.

    ``algorithm`` may also be ``"casgc"`` or ``"scck"``; those rows are
    evaluated on the requested ``N`` with coding parameter ``N - 2f`` and
    are not simulated.
    """
    name = algorithm.value if isinstance(algorithm, Algorithm) else str(algorithm).lower()
    n, f, k, nu = params.n, params.f, params.k, params.nu
    F = Fraction
    if name in ("alg1", "alg2a"):
        c = F(n, k)
        return Costs(c, c, c, 2 * c)
    if name == "alg2":
        hybrid = k + 2 * f + F(n - k - 2 * f, k)
        write = hybrid if markers else k + 2 * f + F(n, k)
        return Costs(hybrid, F(n, k), write, 2 * (k + 2 * f + F(n - k - f, k)))
    if name == "abd":
        r = F(effective_params(Algorithm.ABD, params).n)
        return Costs(r, r, r, 2 * r)
    if name in ("casgc", "scck"):
        n = params.requested_n  # these algorithms run on all requested servers
    if name == "casgc":
        d = n - 2 * f
        return Costs(None, F(nu * n, d), F(n, d), F(2 * n, d))
    if name == "scck":
        return Costs(F(2 * n), F(n, n - 2 * f), F(n), F(2 * n))
    raise ValueError(f"no cost row for {algorithm!r}")


def read_comm_bound(params: SystemParams, algorithm: Algorithm, *, markers: bool = True) -> Fraction:
    """Largest possible read cost: responses from all servers plus the write-back."""
    if algorithm is Algorithm.ALG2:
        k, f, n = params.k, params.f, params.n
        phase = k + 2 * f + Fraction(n - k - 2 * f, k)
        return phase + (phase if markers else k + 2 * f + Fraction(n, k))
    return expected_costs(params, algorithm).read_comm


def abd_gap(params: SystemParams) -> tuple[Fraction, Fraction]:
    """Storage saved over replication, as a difference and in factored form."""
    n, f, k, nu = params.n, params.f, params.k, params.nu
    return Fraction(2 * f + 1) - Fraction(n, k), Fraction(k - 1, k) * (2 * f + 1 - nu)


def cost_report(trace: Trace) -> CostReport:
    worst, steady, consistent = measure_storage(trace)
    w, r = measure_comm(trace)
    markers = bool(trace.config.get("markers", True))
    return CostReport(worst, steady, consistent, w, r,
                      expected_costs(trace.params, trace.algorithm, markers=markers),
                      read_comm_bound(trace.params, trace.algorithm, markers=markers))


def fmt(x: Fraction | None, missing: str = "unbounded") -> str:
    if x is None:
        return missing
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def comparison_rows(params: SystemParams, measured: dict[str, CostReport] | None = None) -> list[list[str]]:
    header = ["N", "f", "nu", "k", "algorithm", "worst_storage", "steady_storage", "write_comm", "read_comm"]
    if measured:
        header += ["measured_worst", "measured_steady", "measured_write", "measured_read"]
    rows = [header]
    for name in COMPARISON_ROWS:
        c = expected_costs(params, name)
        row = [str(params.n), str(params.f), str(params.nu), str(params.k), LABELS[name], *map(fmt, c.fields())]
        if measured:
            m = measured.get(name)
            row += (["-"] * 4 if m is None else
                    [fmt(x, "-") for x in (m.worst_case_storage, m.steady_state_storage,
                                           m.write_comm_max, m.read_comm_max)])
        rows.append(row)
    return rows


def render_text(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def render_csv(rows: list[list[str]]) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()
