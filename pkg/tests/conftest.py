from __future__ import annotations

import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

# "CRITERION k: PASS/FAIL ..." lines from test_acceptance, echoed at the end
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERIA, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
