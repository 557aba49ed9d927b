import re

_CRITERION = re.compile(r"test_criterion_(\d+)_(\w+)")
_results: dict[int, list] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m or (report.when != "call" and report.passed):
        return
    n, name = int(m.group(1)), m.group(2).replace("_", " ")
    detail = dict(report.user_properties).get("detail", "")
    prev = _results.get(n)
    ok = report.passed and (prev is None or prev[0])
    _results[n] = [ok, name, detail or (prev[2] if prev else "")]


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        ok, name, detail = _results[n]
        line = f"criterion {n:2d} {'PASS' if ok else 'FAIL'}  {name}"
        terminalreporter.write_line(line + (f"  ({detail})" if detail else ""))
