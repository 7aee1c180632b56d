"""Shared pytest plumbing for the acceptance report.

The acceptance tests register one line per criterion here; the terminal
summary hook replays them after the run so they survive output capture.
"""

acceptance_lines: list = []


def report_acceptance(line: str) -> None:
    acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)
