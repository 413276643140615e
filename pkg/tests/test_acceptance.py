"""Acceptance suite: one pass/fail line per criterion.

Desk scale by default.  Set COHERENCELAB_FULL=1 for the large runs
(criterion 6 then uses L in {64, 128, 256} and the tight tolerance).
Run as ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""
import sys

import pytest

from coherencelab import experiments as ex

FULL = ex.full_scale()
SLACK = ex.SlackTracker()
LINES = []


def report(chk):
    line = chk.line()
    LINES.append(line)
    sys.__stdout__.write("\n" + line + "\n")
    sys.__stdout__.flush()
    return chk


@pytest.fixture(scope="module")
def critical_data():
    if FULL:
        return ex.critical_line_data(sizes=(64, 128, 256), realizations=200, times_over_L=(5, 10), slack=SLACK)
    return ex.critical_line_data(sizes=(32, 64, 128), realizations=100, slack=SLACK)


def test_1_entanglement_plateau():
    chk = report(ex.entanglement_plateau(realizations=200, slack=SLACK))
    assert chk.passed, chk.summary


def test_2_classical_purification():
    chk = report(ex.classical_purification(realizations=400 if FULL else 100))
    assert chk.passed, chk.summary


def test_3_eraser_dichotomy():
    chk = report(ex.eraser_dichotomy(realizations=200 if FULL else 40, slack=SLACK))
    assert chk.passed, chk.summary


def test_4_measurement_only_steady_state():
    chk = report(ex.measurement_only_steady())
    assert chk.passed, chk.summary


def test_5_weak_limit_walker():
    chk = report(ex.weak_walker())
    assert chk.passed, chk.summary


def test_6_critical_line(critical_data):
    chk = report(ex.critical_line(critical_data, tol=0.03 if FULL else 0.05))
    assert chk.passed, chk.summary


def test_7_phase_gate_threshold():
    chk = report(ex.phase_gate_threshold(realizations=200 if FULL else 50, slack=SLACK))
    assert chk.passed, chk.summary


def test_8_scaling_collapse(critical_data):
    chk = report(ex.scaling_collapse(critical_data))
    assert chk.passed, chk.summary


def test_9_code_bounds():
    chk = report(ex.code_bounds())
    assert chk.passed, chk.summary


def test_10_oracle_equivalences():
    # (d) reads the slack collected by criteria 1, 3, 6 and 7 in this session;
    # it is left out when those criteria were deselected
    chk = report(ex.oracle_equivalences(slack=SLACK if SLACK.states else None))
    assert chk.passed, chk.summary


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
