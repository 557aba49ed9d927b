from fractions import Fraction as F

import pytest

from ecreg.core import SystemParams
from ecreg.metrics import (
    abd_gap, comparison_rows, cost_report, expected_costs, fmt, measure_comm, measure_storage,
    read_comm_bound, render_csv, render_text, storage_profile,
)
from ecreg.protocols import Algorithm
from ecreg.simulator import CrashSpec, Schedule, Workload, run

GRID = [(n, f, nu) for n in range(3, 16) for f in range(0, (n - 1) // 2 + 1) for nu in range(1, n - 2 * f + 1)]


def oracle_k(n, f, nu):
    return -(-(n - 2 * f) // nu)


def test_seven_one_two_row():
    p = SystemParams(7, 1, 2)
    assert expected_costs(p, "alg1").fields() == (F(7, 3), F(7, 3), F(7, 3), F(14, 3))
    assert expected_costs(p, "alg2").worst_storage == F(17, 3)
    assert expected_costs(p, "alg2").write_comm == F(17, 3)
    assert expected_costs(p, "alg2").read_comm == 12
    assert read_comm_bound(p, Algorithm.ALG2) == F(34, 3)
    assert expected_costs(p, "abd").fields() == (3, 3, 3, 6)
    assert expected_costs(p, "casgc").fields() == (None, F(14, 5), F(7, 5), F(14, 5))
    assert expected_costs(p, "scck").fields() == (14, F(7, 5), 7, 14)


def test_naive_finalize_costs_more():
    p = SystemParams(7, 1, 2)
    assert expected_costs(p, "alg2", markers=False).write_comm == 3 + 2 + F(7, 3)
    assert read_comm_bound(p, Algorithm.ALG2, markers=False) == F(17, 3) + 5 + F(7, 3)


def test_alg2_forms_bound_each_other():
    for point in GRID:
        p = SystemParams(*point)
        tight, table = read_comm_bound(p, Algorithm.ALG2), expected_costs(p, "alg2").read_comm
        assert tight <= table
        assert table - tight == F(2 * p.f, p.k)


def test_storage_saving_over_replication():
    for n, f, nu in GRID:
        diff, factored = abd_gap(SystemParams(n, f, nu))
        assert diff == factored
        k = oracle_k(n, f, nu)
        reduced = (k - 1) * nu + 2 * f + 1
        assert diff == 2 * f + 1 - F(reduced, k)


def test_full_concurrency_matches_replication():
    p = SystemParams(9, 2, 5)
    assert p.k == 1
    assert expected_costs(p, "alg1").fields() == expected_costs(p, "abd").fields()


def test_pair_coding_example():
    for n, f in ((7, 1), (9, 2), (11, 2)):
        p = SystemParams(n, f, n - 2 * f - 1)
        assert p.k == 2 and p.n == n
        assert expected_costs(p, "alg1").steady_storage == F(n, 2)
        assert expected_costs(p, "casgc").steady_storage == F(p.nu * n, n - 2 * f) == n * (1 - F(1, n - 2 * f))


def test_casgc_uses_requested_servers():
    p = SystemParams(13, 2, 3)  # reduced to 11 servers
    assert p.n == 11 and p.requested_n == 13
    assert expected_costs(p, "casgc").write_comm == F(13, 9)


def test_unknown_row():
    with pytest.raises(ValueError):
        expected_costs(SystemParams(5, 1, 1), "raft")


@pytest.mark.parametrize("alg", ["alg1", "alg2a"])
def test_crash_free_read_costs_full_round_trip(alg):
    p = SystemParams(7, 1, 2)
    tr = run(p, alg, Schedule(seed=4), Workload(writers=1, readers=2))
    w, r = measure_comm(tr)
    assert w == F(7, 3) and r == F(14, 3)


def test_storage_profile_starts_at_initial_and_stays_coded():
    p = SystemParams(7, 1, 2)
    tr = run(p, "alg1", Schedule(seed=1), Workload())
    prof = storage_profile(tr)
    assert len(prof) == len(tr.events) and set(prof) == {F(7, 3)}
    assert measure_storage(tr) == (F(7, 3), F(7, 3), True)


def test_hybrid_storage_rises_during_writes():
    p = SystemParams(7, 1, 2)
    tr = run(p, "alg2", Schedule(seed=2, policy="delay-finalize"), Workload(writers=2, readers=1))
    worst, steady, consistent = measure_storage(tr)
    assert F(7, 3) < worst <= F(17, 3) and steady == F(7, 3) and consistent


def test_crashed_server_storage_still_counts():
    p = SystemParams(7, 1, 2)
    tr = run(p, "alg2", Schedule(seed=2, crashes=[CrashSpec("s1", 0)]), Workload(writers=1, readers=0))
    assert measure_storage(tr)[0] >= F(7, 3)


def test_report_and_rendering():
    p = SystemParams(7, 1, 2)
    tr = run(p, "alg1", Schedule(seed=1), Workload())
    rep = cost_report(tr)
    d = rep.as_dict()
    assert d["worst_case_storage"] == "7/3" and d["expected"]["read_comm"] == "14/3"
    rows = comparison_rows(p, {"alg1": rep})
    assert rows[1][4] == "Alg 1" and rows[1][-4:] == ["7/3", "7/3", "7/3", "14/3"]
    assert rows[2][-1] == "-"
    text = render_text(rows)
    assert "unbounded" in text and "CASGC" in text
    csv = render_csv(comparison_rows(p))
    assert csv.splitlines()[0].startswith("N,f,nu,k,algorithm")
    assert len(csv.splitlines()) == 7
    assert fmt(F(6, 2)) == "3" and fmt(None, "-") == "-"
