"""End-to-end acceptance checks, one test per criterion.

Run alone with ``pytest tests/test_acceptance.py``; a summary line per
criterion is printed at the end of the session.
"""

import random
import time
from collections import Counter
from fractions import Fraction as F
from itertools import combinations

import pytest

from ecreg.checker import check_liveness, history_from_trace
from ecreg.codec import Codec, InsufficientSymbols
from ecreg.core import CodedSymbol, SystemParams, compute_k, reduce_nodes
from ecreg.fuzz import DEFAULT_GRID, VARIANTS, iteration_bound, make_case, run_case
from ecreg.metrics import abd_gap, expected_costs, measure_comm, measure_storage, read_comm_bound
from ecreg.protocols import Algorithm
from ecreg.simulator import POLICIES, Schedule, Workload, run

RUNS = 1000
FULL_GRID = [(n, f, nu) for n in range(1, 21) for f in range(0, (n - 1) // 2 + 1)
             for nu in range(1, n + 1)]


def _fuzz_stats(cap: bool) -> dict[str, Counter]:
    stats = {}
    for variant in VARIANTS:
        c = Counter()
        for seed in range(RUNS):
            out = run_case(make_case(variant, seed, cap=cap))
            v = out.verdict
            c["runs"] += 1
            c["policy:" + out.case.schedule.policy] += 1
            c["atomicity_fail"] += not v.atomicity.ok
            if v.linearizable is not None:
                c["brute"] += 1
                c["disagree"] += v.linearizable.ok != v.atomicity.ok
            c["scan_fail"] += not v.states.ok
            writes = check_liveness(out.trace, reads=False)
            c["write_live_fail"] += not writes.ok
            c["read_live_fail"] += not v.liveness.ok and v.liveness.prop == "read-termination"
            c["aborts"] += v.aborts
            c["truncated"] += out.trace.truncated
            c["crashes"] += any(e.kind == "crash" for e in out.trace.events)
        stats[variant] = c
    return stats


@pytest.fixture(scope="module")
def uncapped():
    return _fuzz_stats(cap=False)


@pytest.fixture(scope="module")
def capped():
    return _fuzz_stats(cap=True)


def test_criterion_01_coding_parameters(record_property):
    start = time.perf_counter()
    for n, f, nu in FULL_GRID:
        k = -(-(n - 2 * f) // nu)
        reduced = (k - 1) * nu + 2 * f + 1
        assert compute_k(n, f, nu) == k
        assert reduce_nodes(n, f, nu) == reduced <= n
        assert compute_k(reduced, f, nu) == k
        assert (reduced - (2 * f + 1)) % nu == 0 and k == 1 + (reduced - (2 * f + 1)) // nu
    elapsed = time.perf_counter() - start
    record_property("detail", f"{len(FULL_GRID)} points in {elapsed:.2f}s")
    assert elapsed < 1


def _null_direction(codec: Codec, subset: tuple[int, ...], extra: int) -> bytes:
    """A nonzero value whose symbols vanish on ``subset``."""
    w = codec.symbol_bytes
    return codec.decode([CodedSymbol(i, bytes(w)) for i in subset] + [CodedSymbol(extra, b"\x01" * w)])


def test_criterion_02_mds_property(record_property):
    start = time.perf_counter()
    rng = random.Random(2)
    subsets = 0
    for n in range(1, 11):
        for k in range(1, n + 1):
            codec = Codec(n, k, 2 * k)  # no padding, so every value is a full codeword
            values = [rng.randbytes(2 * k) for _ in range(100)]
            encoded = [codec.encode(v) for v in values]
            for subset in combinations(range(n), k):
                subsets += 1
                for v, symbols in zip(values, encoded):
                    assert codec.decode([symbols[i] for i in subset]) == v
            for subset in combinations(range(1, n + 1), k - 1):
                extra = next(i for i in range(1, n + 1) if i not in subset)
                ghost = _null_direction(codec, subset, extra)
                assert any(ghost)
                for v, symbols in zip(values, encoded):
                    part = [symbols[i - 1] for i in subset]
                    with pytest.raises(InsufficientSymbols):
                        codec.decode(part)
                    # Another value agrees on every one of these symbols.
                    other = bytes(a ^ b for a, b in zip(v, ghost))
                    assert other != v
                    assert [codec.encode_one(other, i) for i in subset] == part
    elapsed = time.perf_counter() - start
    record_property("detail", f"{subsets} decoding subsets, {elapsed:.1f}s")
    assert elapsed < 30


def test_criterion_03_atomicity_fuzz(uncapped, record_property):
    for variant, c in uncapped.items():
        assert c["runs"] >= RUNS
        assert all(c["policy:" + p] > 0 for p in POLICIES)
        assert c["atomicity_fail"] == 0, variant
        assert c["disagree"] == 0, variant
    runs = sum(c["runs"] for c in uncapped.values())
    brute = sum(c["brute"] for c in uncapped.values())
    record_property("detail", f"{runs} runs over {len(uncapped)} variants, {brute} cross-checked by brute force")


def test_criterion_04_write_termination(uncapped, record_property):
    fails = {v: c["write_live_fail"] for v, c in uncapped.items() if c["write_live_fail"]}
    crashed = sum(c["crashes"] for c in uncapped.values())
    record_property("detail", f"{crashed} runs with crashes; failures: {fails or 'none'}")
    assert not fails


def test_criterion_05_read_termination(capped, record_property):
    aborts = {v: c["aborts"] for v, c in capped.items()}
    stuck = {v: c["read_live_fail"] for v, c in capped.items() if c["read_live_fail"]}
    assert all(c["runs"] >= RUNS for c in capped.values())
    record_property("detail", f"{sum(c['runs'] for c in capped.values())} capped runs, "
                              f"{sum(aborts.values())} aborts")
    assert sum(aborts.values()) == 0 and not stuck


BOUNDARY = {"alg1": (SystemParams(7, 1, 2), 1), "alg2": (SystemParams(7, 1, 2), 2),
            "alg2a": (SystemParams(9, 2, 3), 2)}


def _aborted_overlap(trace) -> int:
    abort_at = {e.op: e.seq for e in trace.events if e.kind == "abort"}
    hist = history_from_trace(trace)
    writes = [o for o in hist if o.kind == "write"]
    best = 0
    for op, end in abort_at.items():
        r = next(o for o in hist if o.op == op)
        best = max(best, sum(1 for w in writes if w.invoke_seq < end and r.invoke_seq < w.end))
    return best


def test_criterion_06_liveness_boundary(record_property):
    found = {}
    for alg, (params, writers) in BOUNDARY.items():
        for seed in range(200):
            tr = run(params, alg, Schedule(seed=seed, policy="starve-reader"),
                     Workload(writers=writers, readers=1, writes_per_writer=4, reads_per_reader=2))
            if _aborted_overlap(tr) >= params.nu:
                found[alg] = seed
                break
    record_property("detail", ", ".join(f"{a} seed {s}" for a, s in found.items()))
    assert set(found) == set(BOUNDARY)


def _grid_runs(algorithm: str, params: SystemParams, seeds=range(6)):
    writers = 1 if algorithm in ("alg1", "abd") else 2
    for policy in POLICIES:
        for seed in seeds:
            yield policy, run(params, algorithm, Schedule(seed=seed, policy=policy),
                              Workload(writers=writers, readers=2, writes_per_writer=3, reads_per_reader=3))


def test_criterion_07_storage_regression(record_property):
    checked = 0
    for point in DEFAULT_GRID:
        p = SystemParams(*point)
        n_over_k = F(p.n, p.k)
        for alg in ("alg1", "alg2a"):
            for _, tr in _grid_runs(alg, p):
                assert measure_storage(tr) == (n_over_k, n_over_k, True)
                checked += 1
        abd = F(2 * p.f + 1)
        for _, tr in _grid_runs("abd", p):
            assert measure_storage(tr) == (abd, abd, True)
            checked += 1
        hybrid = expected_costs(p, "alg2").worst_storage
        assert hybrid == p.k + 2 * p.f + F(p.n - p.k - 2 * p.f, p.k)
        reached = False
        for policy, tr in _grid_runs("alg2", p):
            worst, steady, consistent = measure_storage(tr)
            assert worst <= hybrid and steady == n_over_k and consistent
            reached |= policy == "delay-finalize" and worst == hybrid
            checked += 1
        assert reached, point
    record_property("detail", f"{checked} crash-free runs over {len(DEFAULT_GRID)} grid points")


def test_criterion_08_communication_regression(record_property):
    for point in DEFAULT_GRID:
        p = SystemParams(*point)
        n_over_k = F(p.n, p.k)
        read_max = []
        for _, tr in _grid_runs("alg1", p):
            w, r = measure_comm(tr)
            assert w == n_over_k and (r is None or r <= 2 * n_over_k)
            read_max.append(r)
        assert 2 * n_over_k in read_max
        hybrid_write = p.k + 2 * p.f + F(p.n - p.k - 2 * p.f, p.k)
        for _, tr in _grid_runs("alg2", p):
            w, r = measure_comm(tr)
            assert w == hybrid_write
            assert r is None or r <= read_comm_bound(p, Algorithm.ALG2) <= expected_costs(p, "alg2").read_comm
        for _, tr in _grid_runs("abd", p):
            assert measure_comm(tr)[0] == 2 * p.f + 1
    record_property("detail", "write costs exact, alg1 reads reach 2N/k")


SPECIAL = [(5, 1, 3), (7, 1, 5), (7, 2, 3), (9, 2, 5), (9, 3, 3), (11, 2, 9)]


def _responses(trace):
    return [(e.node, e.op_kind, e.value, e.tag) for e in trace.events if e.kind in ("respond", "abort")]


def test_criterion_09_replication_special_case(record_property):
    compared = 0
    for point in SPECIAL:
        p = SystemParams(*point)
        assert p.k == 1 and p.n == 2 * p.f + 1
        for seed in range(40):
            case = make_case("alg1", seed, [point])
            coded = run(p, "alg1", case.schedule, case.workload)
            rep = run(p, "abd", case.schedule, case.workload)
            assert _responses(coded) == _responses(rep), (point, seed)
            assert measure_storage(coded) == measure_storage(rep)
            assert measure_comm(coded) == measure_comm(rep)
            compared += 1
        assert expected_costs(p, "alg1").fields() == expected_costs(p, "abd").fields()
    record_property("detail", f"{compared} schedule pairs identical")


FW_GRID = [pt for pt in DEFAULT_GRID if pt[2] >= 2]


def test_criterion_10_retry_read_termination(record_property):
    runs, worst = 0, 0
    for variant in ("alg1-fw", "alg2-fw", "alg2a-fw"):
        for seed in range(400):
            case = make_case(variant, seed, FW_GRID)
            wl = case.workload
            wl.writes_per_writer = min(wl.writes_per_writer, 5 // wl.writers)
            out = run_case(case)
            assert not out.trace.truncated, (variant, seed)
            assert out.verdict.liveness.ok, (variant, seed, out.verdict.liveness.detail)
            n_w = sum(1 for e in out.trace.events if e.kind == "invoke" and e.op_kind == "write")
            assert n_w <= 5
            assert out.max_iterations <= iteration_bound(out.trace.params, n_w)
            worst = max(worst, out.max_iterations)
            runs += 1
    record_property("detail", f"{runs} runs, most iterations for one read: {worst}")


def test_criterion_11_persistence_scans(uncapped, capped, record_property):
    bad = {v: c["scan_fail"] for s in (uncapped, capped) for v, c in s.items() if c["scan_fail"]}
    total = sum(c["runs"] for s in (uncapped, capped) for c in s.values())
    record_property("detail", f"{total} traces scanned")
    assert not bad


def test_criterion_12_storage_saving_identity(record_property):
    for point in FULL_GRID:
        p = SystemParams(*point)
        diff, factored = abd_gap(p)
        assert diff == F(2 * p.f + 1) - F(p.n, p.k) == F(p.k - 1, p.k) * (2 * p.f + 1 - p.nu)
        if p.nu <= 2 * p.f + 1:
            assert F(p.n, p.k) <= 2 * p.f + 1
    record_property("detail", f"{len(FULL_GRID)} points")
