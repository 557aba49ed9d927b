"""Seeded schedule fuzzing: random configurations, every check on every run."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .checker import TraceVerdict, check_trace, history_from_trace
from .core import SystemParams
from .protocols import Algorithm
from .simulator import POLICIES, CrashSpec, Schedule, Trace, Workload, run

VARIANTS: dict[str, tuple[Algorithm, str]] = {
    "alg1": (Algorithm.ALG1, "abort"),
    "alg2": (Algorithm.ALG2, "abort"),
    "alg2a": (Algorithm.ALG2A, "abort"),
    "abd": (Algorithm.ABD, "abort"),
    "alg1-fw": (Algorithm.ALG1, "retry"),
    "alg2-fw": (Algorithm.ALG2, "retry"),
    "alg2a-fw": (Algorithm.ALG2A, "retry"),
}

DEFAULT_GRID = ((5, 1, 1), (7, 1, 2), (9, 2, 2), (13, 2, 3))
FUZZ_STEP_LIMIT = 20_000


def iteration_bound(params: SystemParams, writes: int) -> int:
    """Loose cap on retry iterations of one read when ``writes`` writes are ever invoked."""
    n, f = params.n, params.f
    return (2 ** (n + 1) - 2 ** (n - f)) * writes + 1


@dataclass
class FuzzCase:
    variant: str
    seed: int
    params: SystemParams
    schedule: Schedule
    workload: Workload
    step_limit: int = FUZZ_STEP_LIMIT

    @property
    def algorithm(self) -> Algorithm:
        return VARIANTS[self.variant][0]


def make_case(variant: str, seed: int, grid: Sequence[tuple[int, int, int]] = DEFAULT_GRID, *,
              policies: Sequence[str] = POLICIES, crashes: bool = True, cap: bool = False,
              step_limit: int = FUZZ_STEP_LIMIT) -> FuzzCase:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; known: {', '.join(VARIANTS)}")
    alg, mode = VARIANTS[variant]
    rng = random.Random(f"{variant}:{seed}")
    params = SystemParams(*grid[rng.randrange(len(grid))])
    policy = policies[seed % len(policies)]
    writers = 1 if alg is Algorithm.ALG1 else rng.randint(1, 3)
    readers = rng.randint(1, 2)
    workload = Workload(writers=writers, readers=readers, writes_per_writer=rng.randint(1, 3),
                        reads_per_reader=rng.randint(1, 3), concurrency_cap=cap, read_mode=mode)
    plan = []
    if crashes:
        n_servers = 2 * params.f + 1 if alg is Algorithm.ABD else params.n
        for s in rng.sample(range(1, n_servers + 1), rng.randint(0, params.f)):
            plan.append(CrashSpec(f"s{s}", rng.randint(0, 150)))
        if rng.random() < 0.4:
            c = rng.randint(1, writers + readers)
            plan.append(CrashSpec(f"c{c}", rng.randint(0, 150), partial=rng.random() < 0.5))
    return FuzzCase(variant, seed, params, Schedule(seed=seed, policy=policy, crashes=plan), workload, step_limit)


@dataclass
class FuzzOutcome:
    case: FuzzCase
    trace: Trace
    verdict: TraceVerdict
    failures: list[str]
    max_iterations: int

    @property
    def ok(self) -> bool:
        return not self.failures


def run_case(case: FuzzCase) -> FuzzOutcome:
    trace = run(case.params, case.algorithm, case.schedule, case.workload, case.step_limit)
    retry = case.workload.read_mode == "retry"
    must_read = retry or case.workload.concurrency_cap
    v = check_trace(trace, read_liveness=must_read)
    failures = []
    if not v.atomicity.ok:
        failures.append(f"atomicity: {v.atomicity.prop}: {v.atomicity.detail}")
    if v.linearizable is not None and not v.linearizable.ok:
        failures.append("linearizability: brute-force search found no legal order")
    if not v.states.ok:
        failures.append(f"state scan: {v.states.failures[0]}")
    if not v.liveness.ok:
        failures.append(f"liveness: {v.liveness.prop}: {v.liveness.detail}")
    iters = [o.iterations or 1 for o in history_from_trace(trace) if o.kind == "read" and o.complete]
    max_it = max(iters, default=0)
    if retry:
        bound = iteration_bound(trace.params, sum(1 for e in trace.events
                                                  if e.kind == "invoke" and e.op_kind == "write"))
        if max_it > bound:
            failures.append(f"retry read took {max_it} iterations, bound {bound}")
    return FuzzOutcome(case, trace, v, failures, max_it)


@dataclass
class FuzzSummary:
    runs: int = 0
    failed: int = 0
    violations: int = 0
    aborts: int = 0
    truncated: int = 0
    brute_forced: int = 0
    max_iterations: int = 0
    per_variant: dict[str, dict[str, int]] = field(default_factory=dict)
    failures: list[FuzzOutcome] = field(default_factory=list)

    def add(self, out: FuzzOutcome) -> None:
        self.runs += 1
        row = self.per_variant.setdefault(out.case.variant, {"runs": 0, "failed": 0, "aborts": 0})
        row["runs"] += 1
        row["aborts"] += out.verdict.aborts
        self.aborts += out.verdict.aborts
        self.truncated += out.trace.truncated
        self.brute_forced += out.verdict.linearizable is not None
        self.max_iterations = max(self.max_iterations, out.max_iterations)
        v = out.verdict
        if not (v.atomicity.ok and v.states.ok and (v.linearizable is None or v.linearizable.ok)):
            self.violations += 1
        if not out.ok:
            self.failed += 1
            row["failed"] += 1
            self.failures.append(out)

    def lines(self) -> list[str]:
        out = [f"runs={self.runs} failed={self.failed} violations={self.violations} aborts={self.aborts} "
               f"truncated={self.truncated} brute_forced={self.brute_forced} max_iterations={self.max_iterations}"]
        for name, row in self.per_variant.items():
            out.append(f"  {name:9s} runs={row['runs']} failed={row['failed']} aborts={row['aborts']}")
        return out


def fuzz(variants: Iterable[str], seeds: Iterable[int] | int, grid: Sequence[tuple[int, int, int]] = DEFAULT_GRID,
         **kw) -> FuzzSummary:
    seeds = range(seeds) if isinstance(seeds, int) else seeds
    seeds = list(seeds)
    summary = FuzzSummary()
    for variant in variants:
        for seed in seeds:
            summary.add(run_case(make_case(variant, seed, grid, **kw)))
    return summary
