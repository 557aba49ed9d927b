"""One seeded run of the single-writer coded register, with every check applied."""

from ecreg import SystemParams
from ecreg.checker import check_trace, history_from_trace
from ecreg.metrics import cost_report, fmt
from ecreg.simulator import CrashSpec, Schedule, Workload, run

params = SystemParams(7, 1, 2)
schedule = Schedule(seed=5, policy="skew-quorum", crashes=[CrashSpec("s6", 40)])
trace = run(params, "alg1", schedule, Workload(writers=1, readers=2))

for op in history_from_trace(trace):
    status = "aborted" if op.aborted else ("done" if op.complete else "open")
    print(f"{op.client} {op.kind:5s} [{op.invoke_seq:4d}, {op.end!s:>5}] tag={op.tag} {status}")

verdict = check_trace(trace)
print("\natomic:", verdict.atomicity.ok, "| linearizable:", verdict.linearizable and verdict.linearizable.ok,
      "| state scans:", verdict.states.ok, "| liveness:", verdict.liveness.ok)
rep = cost_report(trace)
print("storage", fmt(rep.worst_case_storage), "write", fmt(rep.write_comm_max), "read", fmt(rep.read_comm_max, "-"))

# Same seed, same bytes.
assert run(params, "alg1", schedule, Workload(writers=1, readers=2)).to_jsonl() == trace.to_jsonl()
