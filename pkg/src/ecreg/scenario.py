"""Scenario files: one TOML document describing a single run and its checks.

Example::

    algorithm = "alg2"

    [params]
    n = 7
    f = 1
    nu = 2

    [schedule]
    seed = 1
    policy = "delay-finalize"

    [[schedule.crash]]
    node = "s3"
    at = 40

    [workload]
    writers = 2
    readers = 2

    [checks.costs]
    worst_storage = "formula"

Unknown keys are errors. Cost expectations are ``"formula"`` (equal to the
closed form), ``"bound"`` (at most the closed form) or an exact fraction
such as ``"17/3"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any

import tomli

from .core import ModelViolation, SystemParams
from .protocols import Algorithm
from .simulator import DEFAULT_STEP_LIMIT, POLICIES, CrashSpec, Schedule, Workload

COST_KEYS = ("worst_storage", "steady_storage", "write_comm", "read_comm")


class ScenarioError(ValueError):
    """The scenario text does not describe exactly one valid run."""


@dataclass
class Checks:
    atomicity: bool = True
    linearizability: bool = True
    persistence: bool = True
    write_liveness: bool = True
    read_liveness: bool = False
    costs: dict[str, str] = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    algorithm: Algorithm
    params: SystemParams
    schedule: Schedule
    workload: Workload
    checks: Checks = field(default_factory=Checks)
    step_limit: int = DEFAULT_STEP_LIMIT
    markers: bool = True


def _table(raw: dict, key: str, allowed: dict[str, type | tuple], where: str) -> dict:
    sec = raw.get(key, {})
    if not isinstance(sec, dict):
        raise ScenarioError(f"[{where}] must be a table")
    unknown = sorted(set(sec) - set(allowed))
    if unknown:
        raise ScenarioError(f"unknown key(s) in [{where}]: {', '.join(unknown)}")
    for k, v in sec.items():
        types = allowed[k]
        if isinstance(v, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
            raise ScenarioError(f"[{where}] {k} has the wrong type")
        if not isinstance(v, types):
            raise ScenarioError(f"[{where}] {k} has the wrong type")
    return sec


def _cost_expectation(key: str, v: Any) -> str:
    if not isinstance(v, str):
        raise ScenarioError(f"[checks.costs] {key} must be a string")
    if v in ("formula", "bound"):
        return v
    try:
        Fraction(v)
    except (ValueError, ZeroDivisionError):
        raise ScenarioError(f"[checks.costs] {key}: expected 'formula', 'bound' or a fraction, got {v!r}") from None
    return v


def parse_scenario(text: str, name: str = "scenario") -> Scenario:
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ScenarioError(f"not valid TOML: {exc}") from None
    top = {"algorithm", "name", "params", "schedule", "workload", "checks", "run"}
    unknown = sorted(set(raw) - top)
    if unknown:
        raise ScenarioError(f"unknown top-level key(s): {', '.join(unknown)}")
    if "algorithm" not in raw:
        raise ScenarioError("missing 'algorithm'")
    try:
        algorithm = Algorithm(raw["algorithm"])
    except ValueError:
        raise ScenarioError(f"unknown algorithm {raw['algorithm']!r}; known: "
                            f"{', '.join(a.value for a in Algorithm)}") from None
    name = raw.get("name", name)
    if not isinstance(name, str):
        raise ScenarioError("'name' must be a string")

    p = _table(raw, "params", {"n": int, "f": int, "nu": int, "value_size_bits": int}, "params")
    missing = [k for k in ("n", "f", "nu") if k not in p]
    if missing:
        raise ScenarioError(f"[params] missing {', '.join(missing)}")
    try:
        params = SystemParams(p["n"], p["f"], p["nu"], p.get("value_size_bits", 96))
    except ModelViolation as exc:
        raise ScenarioError(f"[params] {exc}") from None

    s = _table(raw, "schedule", {"seed": int, "policy": str, "fairness": bool, "fairness_bound": int,
                                 "crash": list}, "schedule")
    if s.get("policy", "random") not in POLICIES:
        raise ScenarioError(f"[schedule] unknown policy {s['policy']!r}; known: {', '.join(POLICIES)}")
    crashes = []
    for i, c in enumerate(s.get("crash", [])):
        c = _table({"c": c}, "c", {"node": str, "at": int, "partial": bool}, f"schedule.crash.{i}")
        if "node" not in c or "at" not in c:
            raise ScenarioError(f"[schedule.crash.{i}] needs node and at")
        crashes.append(CrashSpec(c["node"], c["at"], c.get("partial", False)))
    schedule = Schedule(seed=s.get("seed", 0), policy=s.get("policy", "random"),
                        crashes=crashes, fairness=s.get("fairness", True),
                        fairness_bound=s.get("fairness_bound"))

    w = _table(raw, "workload", {"writers": int, "readers": int, "writes_per_writer": (int, str),
                                 "reads_per_reader": int, "concurrency_cap": bool, "read_mode": str},
               "workload")
    wpw = w.get("writes_per_writer", 3)
    if isinstance(wpw, str):
        if wpw != "unbounded":
            raise ScenarioError("[workload] writes_per_writer must be an integer or 'unbounded'")
        wpw = None
    if w.get("read_mode", "abort") not in ("abort", "retry"):
        raise ScenarioError("[workload] read_mode must be 'abort' or 'retry'")
    workload = Workload(writers=w.get("writers", 1), readers=w.get("readers", 1), writes_per_writer=wpw,
                        reads_per_reader=w.get("reads_per_reader", 3),
                        concurrency_cap=w.get("concurrency_cap", False), read_mode=w.get("read_mode", "abort"))
    if algorithm is Algorithm.ALG1 and workload.writers != 1:
        raise ScenarioError("alg1 is a single-writer algorithm: set writers = 1")
    if workload.read_mode == "retry" and not algorithm.supports_retry:
        raise ScenarioError("read_mode 'retry' is not available for abd")

    chk = raw.get("checks", {})
    costs = chk.get("costs", {}) if isinstance(chk, dict) else {}
    c = _table(raw, "checks", {"atomicity": bool, "linearizability": bool, "persistence": bool,
                               "write_liveness": bool, "read_liveness": bool, "costs": dict}, "checks")
    _table({"c": costs}, "c", {k: str for k in COST_KEYS}, "checks.costs")
    checks = Checks(atomicity=c.get("atomicity", True), linearizability=c.get("linearizability", True),
                    persistence=c.get("persistence", True), write_liveness=c.get("write_liveness", True),
                    read_liveness=c.get("read_liveness", False),
                    costs={k: _cost_expectation(k, v) for k, v in costs.items()})

    r = _table(raw, "run", {"step_limit": int, "markers": bool}, "run")
    step_limit = r.get("step_limit", DEFAULT_STEP_LIMIT)
    if step_limit <= 0:
        raise ScenarioError("[run] step_limit must be positive")
    return Scenario(name, algorithm, params, schedule, workload, checks, step_limit, r.get("markers", True))


def shipped_scenarios() -> list[str]:
    root = resources.files("ecreg") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def load_scenario(ref: str | Path) -> Scenario:
    """Load a scenario from a path, or by the name of a shipped scenario."""
    path = Path(ref)
    if path.is_file():
        return parse_scenario(path.read_text(encoding="utf-8"), path.stem)
    shipped = resources.files("ecreg") / "scenarios" / f"{ref}.toml"
    if shipped.is_file():
        return parse_scenario(shipped.read_text(encoding="utf-8"), str(ref))
    raise ScenarioError(f"no scenario file or shipped scenario named {str(ref)!r}")
