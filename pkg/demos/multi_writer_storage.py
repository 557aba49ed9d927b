"""Storage of the replicate-then-code register while finalize messages are held back."""

from fractions import Fraction

from ecreg import SystemParams
from ecreg.metrics import expected_costs, fmt, measure_storage, storage_profile
from ecreg.simulator import Schedule, Workload, run, steady_state_points

params = SystemParams(7, 1, 2)
trace = run(params, "alg2", Schedule(seed=7, policy="delay-finalize"), Workload(writers=2, readers=2))
profile = storage_profile(trace)
steady = set(steady_state_points(trace))

# A coarse plot: one row per 40 events, plus a mark for steady points.
for i in range(0, len(profile), 40):
    units = profile[i]
    bar = "#" * round(float(units) * 6)
    print(f"{i:5d} {fmt(units):>5} {'S' if i in steady else ' '} {bar}")

worst, steady_units, _ = measure_storage(trace)
print(f"\nworst {fmt(worst)} (closed form {fmt(expected_costs(params, 'alg2').worst_storage)}), "
      f"steady {fmt(steady_units)} = N/k = {Fraction(params.n, params.k)}")
