"""Shared fixtures plus the acceptance-criteria terminal summary.

test_acceptance.py names its tests test_criterion_NN_*; the summary hook
below rolls those up into one pass/fail line per criterion so a full run
ends with an at-a-glance scorecard.
"""
from __future__ import annotations

import pytest
from hypothesis import settings

import helpers

settings.register_profile("bounds", max_examples=1000, derandomize=True, deadline=None)
settings.register_profile("default", max_examples=200, derandomize=True, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def coattendance():
    return helpers.coattendance_dataset()


CRITERIA = (
    ("01", "novelty fixed value"),
    ("02", "tenure span arithmetic"),
    ("03", "propensity ratio"),
    ("04", "bounds property suites (1000 cases each)"),
    ("05", "modularity identities and exact-search bound"),
    ("06", "panel estimator matches LSDV oracle"),
    ("07", "attendance-preserving null, planted-cluster direction"),
    ("08", "static simulation: zero novelty, rewiring attribution"),
    ("09", "new-term adopters skew junior"),
    ("10", "negative novelty coefficient on rewired data"),
    ("11", "determinism and pipeline runtime"),
)

_RANK = {"passed": 0, "skipped": 1, "failed": 2, "error": 2}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    worst: dict[str, int] = {}
    for key, rank in _RANK.items():
        for rep in terminalreporter.stats.get(key, ()):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            marker = "test_criterion_"
            at = nodeid.find(marker)
            if at < 0:
                continue
            num = nodeid[at + len(marker):at + len(marker) + 2]
            worst[num] = max(worst.get(num, 0), rank)
    if not worst:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    verdicts = {0: "PASS", 1: "SKIP", 2: "FAIL"}
    for num, label in CRITERIA:
        if num not in worst:
            line = f"criterion {num}  {label:<52s} NOT RUN"
            terminalreporter.write_line(line, yellow=True)
            continue
        verdict = verdicts[worst[num]]
        line = f"criterion {num}  {label:<52s} {verdict}"
        terminalreporter.write_line(
            line, green=verdict == "PASS", red=verdict == "FAIL", yellow=verdict == "SKIP"
        )
