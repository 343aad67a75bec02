import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from graphod.generators import community_graph  # noqa: E402
from graphod.graph import from_edges  # noqa: E402

ACCEPTANCE_FILE = "test_acceptance.py"
_acceptance = []
_details = {}


@pytest.fixture
def small_graph():
    """40-node community graph with one isolated node (id 39)."""
    g = community_graph(num_nodes=40, num_communities=2, p_in=0.3, p_out=0.02,
                        feature_dim=5, seed=11)
    keep = [(u, v) for u, v in g.edges() if u != 39 and v != 39]
    return from_edges(40, np.array(keep), g.features)


@pytest.fixture
def record(request):
    """Attach a measurement to the acceptance summary line of this test."""
    def add(text):
        _details.setdefault(request.node.nodeid, []).append(text)
    return add


def pytest_runtest_logreport(report):
    if ACCEPTANCE_FILE not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance.append((report.nodeid, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, outcome in _acceptance:
        verdict = "PASS" if outcome == "passed" else "FAIL"
        detail = "; ".join(_details.get(nodeid, []))
        name = nodeid.split("::")[-1]
        terminalreporter.write_line(f"{verdict}  {name}" + (f"  [{detail}]" if detail else ""))
