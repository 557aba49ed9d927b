"""Reads abort once too many writes overlap them; the retry read does not give up."""

from ecreg import SystemParams
from ecreg.checker import history_from_trace
from ecreg.simulator import Schedule, Workload, run

params = SystemParams(7, 1, 2)


def reads(mode, cap, seeds=range(50)):
    done = aborted = most = 0
    for seed in seeds:
        wl = Workload(writers=1, readers=2, writes_per_writer=4, concurrency_cap=cap, read_mode=mode)
        trace = run(params, "alg1", Schedule(seed=seed, policy="starve-reader"), wl)
        for op in history_from_trace(trace):
            if op.kind == "read":
                done += op.complete
                aborted += op.aborted
                most = max(most, op.iterations or 0)
    return done, aborted, most


print("abort-style reads, uncapped  : done=%d aborted=%d" % reads("abort", False)[:2])
print("abort-style reads, capped    : done=%d aborted=%d" % reads("abort", True)[:2])
print("retry reads, uncapped        : done=%d aborted=%d most iterations=%d" % reads("retry", False))
