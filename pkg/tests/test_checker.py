from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from ecreg.checker import (
    MalformedHistory, OperationRecord, brute_force_linearizable, check_liveness, check_tag_atomicity,
    check_trace, history_from_trace, scan_states,
)
from ecreg.core import SW_ZERO, SystemParams, Tag
from ecreg.simulator import CrashSpec, Schedule, Workload, run

V0 = b"\x00" * 4


def v(i):
    return bytes([i]) * 4


def W(op, inv, resp, z, client="c1"):
    return OperationRecord(op, client, "write", inv, resp, v(z), Tag(z))


def R(op, inv, resp, z, client="c2", value=None):
    return OperationRecord(op, client, "read", inv, resp, v(z) if value is None and z else (value or V0),
                           SW_ZERO if z == 0 else Tag(z))


def both(history):
    return check_tag_atomicity(history, V0, multi_writer=False), brute_force_linearizable(history, V0)


def test_sequential_history_passes():
    h = [W(1, 0, 1, 1), R(2, 2, 3, 1), W(3, 4, 5, 2), R(4, 6, 7, 2, client="c3")]
    a, b = both(h)
    assert a.ok and b.ok


def test_stale_read_fails():
    h = [W(1, 0, 1, 1), W(2, 2, 3, 2), R(3, 4, 5, 1)]
    a, b = both(h)
    assert not a.ok and a.prop == "real-time" and not b.ok


def test_concurrent_read_may_see_either_value():
    for z in (0, 1):
        a, b = both([W(1, 0, 10, 1), R(2, 2, 5, z)])
        assert a.ok and b.ok


def test_new_old_inversion_fails():
    # The write never completes, yet one read sees it and a later read does not.
    h = [W(1, 0, None, 1), R(2, 1, 2, 1), R(3, 3, 4, 0, client="c3")]
    a, b = both(h)
    assert not a.ok and not b.ok


def test_read_of_incomplete_write_passes():
    a, b = both([W(1, 0, None, 1), R(2, 1, 2, 1)])
    assert a.ok and b.ok


def test_equal_write_tags_fail():
    a = check_tag_atomicity([W(1, 0, 1, 1), W(2, 2, 3, 1, client="c3")], V0, multi_writer=False)
    assert a.prop == "distinct-write-tags"


def test_wrong_value_and_phantom_tag_fail():
    bad_value = [W(1, 0, 1, 1), R(2, 2, 3, 1, value=v(9))]
    assert check_tag_atomicity(bad_value, V0).prop == "read-value"
    phantom = [R(2, 2, 3, 4)]
    assert check_tag_atomicity(phantom, V0).prop == "read-value"
    initial_bad = [R(2, 2, 3, 0, value=v(5))]
    assert check_tag_atomicity(initial_bad, V0).prop == "read-value"
    for h in (bad_value, phantom, initial_bad):
        assert not brute_force_linearizable(h, V0).ok


def test_read_of_future_write_fails():
    h = [R(1, 0, 1, 1), W(2, 2, 3, 1)]
    assert check_tag_atomicity(h, V0).prop == "real-time"
    assert not brute_force_linearizable(h, V0).ok


def test_textbook_non_linearizable_register():
    # w(1) completes, w(2) is concurrent with two reads that see 2 then 1.
    h = [W(1, 0, 1, 1), W(2, 2, 20, 2, client="c4"), R(3, 3, 4, 2), R(4, 5, 6, 1, client="c3")]
    a, b = both(h)
    assert not a.ok and not b.ok


def test_malformed_histories_raise():
    with pytest.raises(MalformedHistory):
        check_tag_atomicity([W(1, 5, 5, 1)], V0)
    with pytest.raises(MalformedHistory):
        check_tag_atomicity([W(1, 0, 5, 1), W(2, 3, 7, 2)], V0)


def test_brute_force_limit():
    h = [W(i, 2 * i, 2 * i + 1, i) for i in range(1, 12)]
    with pytest.raises(ValueError):
        brute_force_linearizable(h, V0, max_ops=10)


@st.composite
def histories(draw):
    ops = []
    tags = range(1, draw(st.integers(0, 4)) + 1)
    for i, z in enumerate(tags):
        inv, ln = draw(st.integers(0, 30)), draw(st.integers(1, 10))
        resp = 2 * (inv + ln) + 1 if draw(st.integers(0, 3)) else None
        ops.append(W(i + 1, 2 * inv, resp, z, client=f"w{i}"))
    for j in range(draw(st.integers(1, 4))):
        inv, ln = draw(st.integers(0, 30)), draw(st.integers(1, 10))
        ops.append(R(100 + j, 2 * inv, 2 * (inv + ln) + 1, draw(st.sampled_from([0, *tags])), client=f"r{j}"))
    return ops


@settings(max_examples=400, deadline=None)
@given(histories())
def test_tag_order_pass_implies_linearizable(h):
    if check_tag_atomicity(h, V0, multi_writer=False).ok:
        assert brute_force_linearizable(h, V0).ok


# -- on real traces ---------------------------------------------------------------

P = SystemParams(7, 1, 2)


def small_trace(alg="alg1", seed=2, **kw):
    w = 1 if alg == "alg1" else 2
    return run(P, alg, Schedule(seed=seed, **kw), Workload(writers=w, readers=1, writes_per_writer=2,
                                                             reads_per_reader=2))


def test_real_trace_passes_everything():
    for alg in ("alg1", "alg2", "alg2a", "abd"):
        v = check_trace(small_trace(alg))
        assert v.ok and v.linearizable is not None and v.linearizable.ok


def test_history_extraction():
    tr = small_trace()
    h = history_from_trace(tr)
    assert [o.kind for o in h].count("write") == 2 and all(o.complete for o in h)
    reads = [o for o in h if o.kind == "read"]
    assert all(o.iterations == 1 for o in reads if o.complete)


def _insert_after(trace, index, event):
    events = list(trace.events)
    events.insert(index + 1, event)
    return replace(trace, events=events)


def test_scan_catches_tag_regression():
    tr = small_trace()
    assert scan_states(tr).ok
    i, e = next((i, e) for i, e in enumerate(tr.events)
                if e.kind == "deliver" and e.stored is not None and e.stored[0] == Tag(2))
    bad = _insert_after(tr, i, replace(e, stored=(SW_ZERO, e.stored[1], e.stored[2])))
    assert not scan_states(bad).ok


def test_scan_catches_coded_to_replica():
    tr = small_trace("alg2", 4)
    i, e = next((i, e) for i, e in enumerate(tr.events)
                if e.kind == "deliver" and e.stored is not None and e.stored[1] == "coded" and e.stored[0].z > 0)
    bad = _insert_after(tr, i, replace(e, stored=(e.stored[0], "replica", P.value_bytes)))
    report = scan_states(bad)
    assert not report.ok and "replica" in report.failures[0]


def test_scan_catches_lost_write():
    tr = small_trace()
    events = list(tr.events)
    first = next(i for i, e in enumerate(events) if e.kind == "respond" and e.op_kind == "write")
    # Pretend every server still held the initial symbol when the write returned.
    for j in range(first + 1):
        e = events[j]
        if e.kind == "deliver" and e.stored is not None:
            events[j] = replace(e, stored=(SW_ZERO, "coded", e.stored[2]))
    assert not scan_states(replace(tr, events=events)).ok


def test_liveness_flags_stuck_write_and_allows_crashed_clients():
    tr = small_trace()
    ok = check_liveness(tr)
    assert ok.ok
    h = history_from_trace(tr)
    i = next(i for i, o in enumerate(h) if o.kind == "write")
    h[i] = replace(h[i], respond_seq=None)
    assert check_liveness(tr, h).prop == "write-termination"
    crashed = run(P, "alg1", Schedule(seed=1, crashes=[CrashSpec("c1", 3)]), Workload())
    assert check_liveness(crashed).ok
