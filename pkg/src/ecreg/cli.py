"""Command-line front end.

Exit codes are 0 when every enabled check passes, 1 when a check fails
and 2 for usage or parse errors. Artifacts go to ``--out``, or to the
directory named by ``ECREG_OUT``, or to ``./ecreg-out``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import metrics
from .checker import check_trace
from .core import ModelViolation, SystemParams
from .fuzz import DEFAULT_GRID, VARIANTS, fuzz
from .protocols import Algorithm
from .scenario import Checks, Scenario, ScenarioError, load_scenario, shipped_scenarios
from .simulator import POLICIES, CrashSpec, Schedule, Trace, Workload, run

OUT_ENV = "ECREG_OUT"


@dataclass
class RunResult:
    scenario: Scenario
    trace: Trace
    report: metrics.CostReport
    checks: dict[str, tuple[bool, str]] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(ok for ok, _ in self.checks.values())


def _cost_check(expect: str, measured: Fraction | None, formula: Fraction | None) -> tuple[bool, str]:
    fm = metrics.fmt
    if measured is None:
        return False, "not measured: no steady point or no completed operation"
    if expect == "bound":
        ok = formula is None or measured <= formula
        return ok, f"measured {fm(measured)} <= {fm(formula)}"
    target = formula if expect == "formula" else Fraction(expect)
    return measured == target, f"measured {fm(measured)}, expected {fm(target)}"


def evaluate(scenario: Scenario) -> RunResult:
    trace = run(scenario.params, scenario.algorithm, scenario.schedule, scenario.workload,
                scenario.step_limit, markers=scenario.markers)
    chk = scenario.checks
    v = check_trace(trace, read_liveness=chk.read_liveness)
    report = metrics.cost_report(trace)
    res = RunResult(scenario, trace, report)
    if chk.atomicity:
        res.checks["atomicity"] = (v.atomicity.ok, v.atomicity.detail or f"{v.atomicity.dropped} ops dropped")
    if chk.linearizability:
        if v.linearizable is None:
            res.checks["linearizability"] = (True, "skipped: history too large for brute force")
        else:
            res.checks["linearizability"] = (v.linearizable.ok, v.linearizable.detail)
    if chk.persistence:
        res.checks["persistence"] = (v.states.ok, "; ".join(v.states.failures[:3]))
    if chk.write_liveness or chk.read_liveness:
        res.checks["liveness"] = (v.liveness.ok, v.liveness.detail)
    exp = report.expected
    measured = {"worst_storage": report.worst_case_storage, "steady_storage": report.steady_state_storage,
                "write_comm": report.write_comm_max, "read_comm": report.read_comm_max}
    formulas = dict(zip(("worst_storage", "steady_storage", "write_comm", "read_comm"), exp.fields()))
    for key, expect in chk.costs.items():
        res.checks[f"cost:{key}"] = _cost_check(expect, measured[key], formulas[key])
    if "steady_storage" in chk.costs and not report.steady_consistent:
        res.checks["cost:steady_consistent"] = (False, "steady points disagree")
    return res


def scenario_from_trace(trace: Trace) -> Scenario:
    c = trace.config
    p = c["params"]
    s = dict(c["schedule"])
    s["crashes"] = [CrashSpec(**x) for x in s["crashes"]]
    return Scenario(name="replay", algorithm=Algorithm(c["algorithm"]),
                    params=SystemParams(p["n"], p["f"], p["nu"], p["value_size_bits"]),
                    schedule=Schedule(**s), workload=Workload(**c["workload"]), checks=Checks(),
                    step_limit=c["step_limit"], markers=c["markers"])


def out_dir(arg: str | None) -> Path:
    path = Path(arg or os.environ.get(OUT_ENV) or "ecreg-out")
    path.mkdir(parents=True, exist_ok=True)
    return path


def parse_grid(text: str) -> list[tuple[int, int, int]]:
    grid = []
    for part in text.split(","):
        bits = part.strip().split(":")
        if len(bits) != 3 or not all(b.strip().lstrip("-").isdigit() for b in bits):
            raise argparse.ArgumentTypeError(f"grid point {part!r} is not N:f:nu")
        n, f, nu = map(int, bits)
        try:
            SystemParams(n, f, nu)
        except ModelViolation as exc:
            raise argparse.ArgumentTypeError(f"grid point {part!r}: {exc}") from None
        grid.append((n, f, nu))
    return grid


# -- subcommands ----------------------------------------------------------------

def cmd_run(args) -> int:
    replay_of = None
    target = args.scenario
    try:
        if target.endswith(".jsonl") and Path(target).is_file():
            replay_of = Path(target).read_text(encoding="utf-8")
            scenario = scenario_from_trace(Trace.from_lines(replay_of.splitlines()))
        else:
            scenario = load_scenario(target)
    except (ScenarioError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    res = evaluate(scenario)
    if replay_of is not None:
        same = res.trace.to_jsonl() == replay_of
        res.checks["replay"] = (same, "identical trace" if same else "trace differs from the original")
    dest = out_dir(args.out)
    trace_path = dest / f"{scenario.name}.trace.jsonl"
    res.trace.write(trace_path)
    verdicts = {name: {"ok": ok, "detail": d} for name, (ok, d) in res.checks.items()}
    report = {"scenario": scenario.name, "ok": res.ok, "truncated": res.trace.truncated,
              "steps": res.trace.steps, "costs": res.report.as_dict(), "checks": verdicts}
    (dest / f"{scenario.name}.report.json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    p = res.trace.params
    print(f"{scenario.name}: {scenario.algorithm.value} N={p.n} f={p.f} nu={p.nu} k={p.k} "
          f"policy={scenario.schedule.policy} seed={scenario.schedule.seed} steps={res.trace.steps}"
          + (" TRUNCATED" if res.trace.truncated else ""))
    r = res.report
    m = lambda x: metrics.fmt(x, "-")  # noqa: E731
    print(f"  storage worst={m(r.worst_case_storage)} steady={m(r.steady_state_storage)}"
          f"  comm write={m(r.write_comm_max)} read={m(r.read_comm_max)}")
    for name, (ok, detail) in res.checks.items():
        print(f"  [{'ok' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
    print(f"  trace: {trace_path}")
    return 0 if res.ok else 1


def cmd_table(args) -> int:
    measured: dict[str, metrics.CostReport] = {}
    for path in args.trace or []:
        tr = Trace.read(path)
        measured[tr.algorithm.value] = metrics.cost_report(tr)
    blocks = []
    for point in args.grid:
        params = SystemParams(*point)
        rows = metrics.comparison_rows(params, measured or None)
        blocks.append(rows if not blocks or not args.csv else rows[1:])
    if args.csv:
        print("".join(metrics.render_csv(b) for b in blocks), end="")
    else:
        print("\n\n".join(metrics.render_text(b) for b in blocks))
    return 0


def cmd_fuzz(args) -> int:
    unknown = [a for a in args.algorithms if a not in VARIANTS]
    if unknown:
        print(f"error: unknown algorithm variant(s) {', '.join(unknown)}; known: {', '.join(VARIANTS)}",
              file=sys.stderr)
        return 2
    bad_pol = [p for p in args.policies if p not in POLICIES]
    if bad_pol:
        print(f"error: unknown policies {', '.join(bad_pol)}", file=sys.stderr)
        return 2
    seeds = range(args.start_seed, args.start_seed + args.seeds)
    summary = fuzz(args.algorithms, seeds, args.grid, policies=args.policies,
                   crashes=not args.no_crashes, cap=args.cap)
    print("\n".join(summary.lines()))
    code = 0 if summary.failed == 0 else 1
    if args.expect_aborts and summary.aborts == 0:
        print("expected at least one read abort, saw none")
        code = 1
    if summary.failures:
        dest = out_dir(args.out)
        for o in summary.failures[:20]:
            path = dest / f"fuzz-{o.case.variant}-{o.case.seed}.trace.jsonl"
            o.trace.write(path)
            print(f"  FAIL {o.case.variant} seed={o.case.seed}: {'; '.join(o.failures)} -> {path}")
    return code


def cmd_check(args) -> int:
    try:
        trace = Trace.read(args.trace)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: cannot read trace: {exc}", file=sys.stderr)
        return 2
    v = check_trace(trace, read_liveness=args.read_liveness)
    out = v.as_dict()
    out["costs"] = metrics.cost_report(trace).as_dict()
    print(json.dumps(out, indent=2))
    return 0 if v.ok else 1


def cmd_list(_args) -> int:
    for name in shipped_scenarios():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ecreg", description="Coded atomic register simulator and checks.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run a scenario file, a shipped scenario, or replay a saved trace")
    r.add_argument("scenario")
    r.add_argument("--out", help=f"artifact directory (default ${OUT_ENV} or ./ecreg-out)")
    r.set_defaults(fn=cmd_run)

    t = sub.add_parser("table", help="print closed-form cost comparison rows")
    t.add_argument("--grid", type=parse_grid, default=[(7, 1, 2)], help="N:f:nu[,N:f:nu...]")
    t.add_argument("--trace", action="append", help="trace file whose measured costs are shown")
    t.add_argument("--csv", action="store_true")
    t.set_defaults(fn=cmd_table)

    fz = sub.add_parser("fuzz", help="seeded random schedules with all checks")
    fz.add_argument("--seeds", type=int, default=100)
    fz.add_argument("--start-seed", type=int, default=0)
    fz.add_argument("--algorithms", type=lambda s: [x.strip() for x in s.split(",") if x.strip()],
                    default=list(VARIANTS))
    fz.add_argument("--grid", type=parse_grid, default=list(DEFAULT_GRID))
    fz.add_argument("--policies", type=lambda s: [x.strip() for x in s.split(",")], default=list(POLICIES))
    fz.add_argument("--no-crashes", action="store_true")
    fz.add_argument("--cap", action="store_true", help="keep concurrent writes below nu for every read")
    fz.add_argument("--expect-aborts", action="store_true", help="fail unless some read aborts")
    fz.add_argument("--out")
    fz.set_defaults(fn=cmd_fuzz)

    c = sub.add_parser("check", help="check a saved trace")
    c.add_argument("trace")
    c.add_argument("--read-liveness", action="store_true")
    c.set_defaults(fn=cmd_check)

    ls = sub.add_parser("list", help="list shipped scenarios")
    ls.set_defaults(fn=cmd_list)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
