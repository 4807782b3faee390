"""Shared pytest plumbing.

The acceptance tests append one verdict line per criterion; echo them in the
terminal summary so they stay visible even when stdout capture is on.
"""

ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
