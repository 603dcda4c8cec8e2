import pytest

from zonalsched import NodeId, build_topology
from zonalsched.topology import TopologyKind

# criterion id -> (passed, detail), printed at the end of the session
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = ACCEPTANCE_LINES[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def topologies():
    return {(k.value, m): build_topology(k, medium_mode=m) for k in TopologyKind for m in ("wired", "hybrid")}


@pytest.fixture
def s11():
    return NodeId.sensor(1, 1)
