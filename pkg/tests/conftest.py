from __future__ import annotations

import pytest

from dagsched.model import TaskSet

from helpers import chain_dag, diamond_dag, single_node_dag


@pytest.fixture
def diamond():
    return diamond_dag()


@pytest.fixture
def diamond_ts(diamond):
    return TaskSet.build([diamond])


@pytest.fixture
def chain():
    return chain_dag()


@pytest.fixture
def single():
    return single_node_dag()


_CRITERIA = {
    "test_c1_soundness_suite": "1 soundness (every success validates)",
    "test_c2_oracle_equivalence": "2 oracle equivalence (brute force)",
    "test_c3_worked_examples": "3 worked-example regression",
    "test_c4_compaction_properties": "4 compaction properties",
    "test_c5_extension_arithmetic": "5 extension arithmetic",
    "test_c6_baseline_correctness": "6 baseline correctness",
    "test_c7_trend_reproduction": "7 trend reproduction",
    "test_c8_determinism": "8 determinism",
    "test_c9_figure_dependent_checks": "9 figure-dependent checks",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    outcomes: dict[str, str] = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" in nodeid and getattr(rep, "when", "call") == "call":
                name = nodeid.split("::")[-1]
                if name in _CRITERIA:
                    outcomes[name] = label
    for rep in terminalreporter.stats.get("skipped", []):
        nodeid = getattr(rep, "nodeid", "")
        if "test_acceptance.py" in nodeid:
            name = nodeid.split("::")[-1]
            if name in _CRITERIA:
                outcomes[name] = "OMITTED"
    if outcomes:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name in sorted(outcomes, key=lambda n: _CRITERIA[n]):
            terminalreporter.write_line(f"criterion {_CRITERIA[name]}: {outcomes[name]}")
