import pytest

from signal_recovery.enumeration import SearchLimits
from signal_recovery.errors import InvalidInputError
from signal_recovery.experiment import (
    CheckResult,
    CheckStatus,
    SuiteReport,
    verify_coincidence_suite,
    verify_representation_suite,
    verify_stability_suite,
    verify_uniqueness_suite,
)

INSTANCES = 8


def _accounted(report):
    return report.checked + report.hypothesis_not_met + report.inconclusive


def test_suite_report_collect():
    per_instance = [
        (0, [CheckResult(CheckStatus.PASSED, 0.5)]),
        (2, [CheckResult(CheckStatus.VIOLATED, 2.0), CheckResult(CheckStatus.VIOLATED, 3.0)]),
        (3, [CheckResult(CheckStatus.HYPOTHESIS_NOT_MET)]),
        (5, [CheckResult(CheckStatus.INCONCLUSIVE), CheckResult(CheckStatus.PASSED, 0.1)]),
    ]
    report = SuiteReport.collect("demo", 9, per_instance, rejected=2)
    assert report.to_record() == {
        "suite": "demo",
        "master_seed": 9,
        "instances": 4,
        "streams_drawn": 6,
        "checked": 4,
        "violations": 2,
        "hypothesis_not_met": 3,
        "inconclusive": 1,
        "max_ratio": 3.0,
        "violating_streams": [2],
    }


def test_uniqueness_suite():
    report = verify_uniqueness_suite(INSTANCES, 0)
    assert report.violations == 0
    assert report.instances == INSTANCES
    assert report.streams_drawn == INSTANCES + report.hypothesis_not_met
    # Generic 6 x 8 measurements keep the D-spark well above 2k for k <= 2.
    assert report.checked == INSTANCES
    assert report.max_ratio <= 1.0


@pytest.mark.parametrize("epsilon", [0.0, 0.1])
def test_stability_suite(epsilon):
    report = verify_stability_suite(INSTANCES, 1, epsilon)
    assert report.violations == 0
    assert report.instances == INSTANCES
    assert report.checked == INSTANCES
    assert report.streams_drawn == INSTANCES + report.hypothesis_not_met


def test_representation_suite():
    report = verify_representation_suite(INSTANCES, 2, 0.1)
    assert report.violations == 0
    assert report.instances == INSTANCES
    assert report.checked == 2 * INSTANCES
    assert report.streams_drawn == INSTANCES + report.hypothesis_not_met


def test_coincidence_suite():
    report = verify_coincidence_suite(INSTANCES, 3)
    assert report.violations == 0
    assert _accounted(report) == 4 * INSTANCES
    assert report.inconclusive == 0


def test_suites_are_independent_of_workers():
    serial = verify_uniqueness_suite(6, 4, SearchLimits(workers=1))
    parallel = verify_uniqueness_suite(6, 4, SearchLimits(workers=3))
    assert serial == parallel


def test_budget_failures_are_inconclusive():
    report = verify_coincidence_suite(2, 0, SearchLimits(budget=20))
    assert report.inconclusive == 2
    assert report.checked == 0
    assert report.violations == 0


def test_suite_rejects_bad_arguments():
    with pytest.raises(InvalidInputError):
        verify_uniqueness_suite(0, 0)
    with pytest.raises(InvalidInputError):
        verify_stability_suite(1, 0, -0.1)
