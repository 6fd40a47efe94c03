"""Test-session configuration.

The terminal-summary hook prints one PASS/FAIL line per acceptance
criterion (the tests in test_acceptance.py) after the run, so the
verdicts are visible even without -s.
"""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = []
    for outcome in ("passed", "failed"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" in report.nodeid:
                name = report.nodeid.split("::")[-1]
                results.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if not results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, verdict in results:
        terminalreporter.write_line(f"{verdict}  {name}")
