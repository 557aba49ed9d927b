"""Closed-form costs next to costs measured from one run of each simulated register."""

from ecreg import SystemParams
from ecreg.metrics import comparison_rows, cost_report, render_text
from ecreg.simulator import Schedule, Workload, run

params = SystemParams(7, 1, 2)
measured = {}
for alg, writers, policy in (("alg1", 1, "random"), ("alg2a", 2, "random"),
                             ("alg2", 2, "delay-finalize"), ("abd", 1, "random")):
    trace = run(params, alg, Schedule(seed=7, policy=policy), Workload(writers=writers, readers=2))
    measured[alg] = cost_report(trace)

print(render_text(comparison_rows(params, measured)))
