import re

CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)$")
RESULTS = {}


def pytest_runtest_logreport(report):
    match = CRITERION.search(report.nodeid)
    if not match:
        return
    key = (int(match.group(1)), match.group(2).replace("_", " "))
    if report.when == "call" or report.failed:
        if report.failed or key not in RESULTS:
            RESULTS[key] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (num, name), status in sorted(RESULTS.items()):
        terminalreporter.write_line(f"criterion {num:2d} {name}: {status}")
