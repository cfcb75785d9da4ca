import pytest

from ssgraph.cellmodel import BUNDLED, bundled_spec
from ssgraph.transfer import compute_transfer


@pytest.fixture(scope="session")
def specs():
    return {name: bundled_spec(name) for name in BUNDLED}


@pytest.fixture(scope="session")
def transfers(specs):
    return {name: compute_transfer(spec) for name, spec in specs.items()}


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py::test_criterion_" not in nodeid or rep.when != "call":
                continue
            num = int(nodeid.rsplit("_", 1)[-1])
            lines.append((num, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for num, status in sorted(lines):
            terminalreporter.write_line(f"criterion {num}: {status}")
