"""Shared pytest plumbing: one-line-per-criterion acceptance summary."""

from nuwave.analysis import TestFunction

# the class name trips pytest's collector; it is a dataclass, not a suite
TestFunction.__test__ = False


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", "call") != "call":
                continue
            if "test_acceptance" in rep.nodeid:
                rows.append((rep.nodeid.split("::")[-1], status.upper()))
    if not rows:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, status in sorted(rows):
        terminalreporter.write_line("  %-52s %s" % (name, status))
