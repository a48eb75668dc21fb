"""Acceptance gate: every headline claim, one check per line.

Each test runs one registered verification check, prints its PASS/FAIL
line with the measured value, expected value and tolerance, and asserts
the verdict (plus the runtime budget where one is part of the contract).
"""
import pytest

from extparticle.verification import CHECKS

BUDGETS = {
    "spin-intrinsic": 1.0,
    "heisenberg-2d": 1.0,
    "convergence-order": 10.0,
    "dynkin-expansion": 10.0,
    "schrodinger-free-gaussian": 30.0,
    "bohm-paths": 30.0,
}

CRITERIA = [
    "spin-intrinsic",
    "heisenberg-2d",
    "moments-1d",
    "convergence-order",
    "path-irregularity",
    "dynkin-expansion",
    "schrodinger-free-gaussian",
    "complex-hj-ratio",
    "least-action-step",
    "bohm-paths",
    "coupled-run",
    "classical-dp",
    "compton-step",
]


def test_every_registered_check_is_covered():
    assert sorted(CRITERIA) == sorted(CHECKS)


@pytest.mark.parametrize("check_id", CRITERIA)
def test_acceptance(check_id):
    result = CHECKS[check_id]()
    print(result.line())
    assert result.passed, result.line()
    budget = BUDGETS.get(check_id)
    if budget is not None:
        assert result.wall_time_s < budget, (
            f"{check_id} took {result.wall_time_s:.2f}s, budget {budget}s")
