import math

import numpy as np
import pytest

from signal_recovery.certify import (
    INFINITE,
    BoundKind,
    Certifier,
    RecoveryDomain,
    RipFlavor,
    SparkCertificate,
    SparkKind,
    check_uniqueness_representation,
    check_uniqueness_signal,
    d_spark_witness_holds,
    drip_witness_delta,
    rip_witness_delta,
    spark_witness_holds,
    stability_bound,
)
from signal_recovery.enumeration import SearchLimits
from signal_recovery.errors import BudgetExceededError, InvalidInputError
from signal_recovery.model import Dictionary, Support, gen_duplicated_dictionary, gen_gaussian_measurement, gen_paper_dictionary
from signal_recovery.rng import RngStream
from tests.instance_helper import brute_force_d_spark, brute_force_rip, brute_force_spark, gaussian


@pytest.fixture
def certifier():
    return Certifier()


def test_spark_identity_is_infinite(certifier):
    certificate = certifier.spark(np.eye(4), 4)
    assert certificate.is_infinite
    assert certificate.witness is None
    assert certificate.exhausted_up_to == 4
    assert certificate.to_record()["value"] == "INFINITE"


def test_spark_duplicated_atoms(certifier):
    D = gen_duplicated_dictionary(gaussian(0, 5), 4)
    certificate = certifier.spark(D.matrix, 3)
    assert certificate.value == 2
    assert certificate.witness.indices == (0, 1)
    assert certificate.exhausted_up_to == 1
    assert spark_witness_holds(D.matrix, certificate)


def test_spark_zero_column(certifier):
    A = np.array([[1.0, 0.0, 2.0], [0.0, 0.0, 1.0]])
    certificate = certifier.spark(A, 2)
    assert certificate.value == 1
    assert certificate.witness.indices == (1,)


@pytest.mark.parametrize("seed", range(3))
def test_spark_matches_brute_force(certifier, seed):
    A = gaussian(seed, (4, 7))
    A[:, 6] = A[:, 0] - 2.0 * A[:, 3]
    assert certifier.spark(A, 5).value == brute_force_spark(A) == 3


@pytest.mark.parametrize("seed", range(3))
def test_spark_of_measured_paper_dictionary(certifier, seed):
    D = gen_paper_dictionary(20, RngStream(seed))
    M = gen_gaussian_measurement(8, 20, RngStream(seed, 1))
    assert certifier.spark(M.matrix @ D.matrix, 5).value == 4


def test_spark_budget_is_loud():
    with pytest.raises(BudgetExceededError):
        Certifier(SearchLimits(budget=50)).spark(np.eye(10), 3)


def test_spark_cap_validation(certifier):
    with pytest.raises(InvalidInputError):
        certifier.spark(np.eye(3), 4)
    with pytest.raises(InvalidInputError):
        certifier.spark(np.eye(3), 0)


@pytest.mark.parametrize("workers", [1, 3])
def test_spark_is_independent_of_workers(workers):
    D = gen_paper_dictionary(12, RngStream(4))
    certificate = Certifier(SearchLimits(workers=workers)).spark(D.matrix, 4)
    reference = Certifier().spark(D.matrix, 4)
    assert certificate.to_record() == reference.to_record()


def test_d_spark_identity_equals_spark(certifier):
    M = gaussian(7, (5, 9))
    d_spark = certifier.d_spark(M, np.eye(9), 6)
    spark = certifier.spark(M, 6)
    assert d_spark.value == spark.value == 6
    assert d_spark.kind is SparkKind.D_SPARK


def test_d_spark_duplicated_atom_outside_null_space(certifier):
    z = np.array([1.0, 2.0, -1.0])
    D = gen_duplicated_dictionary(z, 5)
    M = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]])
    certificate = certifier.d_spark(M, D, 4)
    assert certificate.is_infinite
    assert certificate.exhausted_up_to == 4


def test_d_spark_duplicated_atom_in_null_space(certifier):
    z = np.array([0.0, 1.0, -1.0])
    D = gen_duplicated_dictionary(z, 5)
    M = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]])
    certificate = certifier.d_spark(M, D, 4)
    assert certificate.value == 1
    assert d_spark_witness_holds(M, D, certificate)


@pytest.mark.parametrize("seed", range(3))
def test_d_spark_matches_brute_force(certifier, seed):
    D = gaussian(100 + seed, (8, 12))
    M = gaussian(200 + seed, (5, 8))
    certificate = certifier.d_spark(M, D, 7)
    assert certificate.value == brute_force_d_spark(M, D)
    assert d_spark_witness_holds(M, D, certificate)


def test_d_spark_invariant_under_scaling(certifier):
    D = gaussian(11, (8, 12))
    M = gaussian(12, (5, 8))
    assert certifier.d_spark(M, D, 7).value == certifier.d_spark(-3.5 * M, D, 7).value


def test_d_spark_dimension_mismatch(certifier):
    with pytest.raises(InvalidInputError):
        certifier.d_spark(np.eye(3), np.eye(4), 2)


def test_rip_orthonormal_columns(certifier):
    Q = np.linalg.qr(gaussian(1, (6, 4)))[0]
    constant = certifier.rip_constant(Q, 3)
    assert constant.delta == pytest.approx(0.0, abs=1e-12)
    assert constant.flavor is RipFlavor.RIP


def test_rip_scaled_identity(certifier):
    assert certifier.rip_constant(2.0 * np.eye(3), 1).delta == pytest.approx(3.0)


def test_rip_wide_row(certifier):
    constant = certifier.rip_constant(np.array([[1.0, 1.0]]), 2)
    assert constant.delta == pytest.approx(1.0)
    assert constant.witness_support.indices == (0, 1)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_rip_matches_brute_force(certifier, k):
    A = gaussian(20, (6, 9)) / math.sqrt(6)
    constant = certifier.rip_constant(A, k)
    assert constant.delta == pytest.approx(brute_force_rip(A, k), abs=1e-12)
    assert rip_witness_delta(A, constant.witness_support) == pytest.approx(constant.delta, abs=1e-10)


def test_rip_is_monotone(certifier):
    A = gaussian(21, (6, 9)) / math.sqrt(6)
    deltas = [certifier.rip_constant(A, k).delta for k in range(1, 5)]
    assert deltas == sorted(deltas)


def test_drip_orthonormal_measurement(certifier):
    M = np.linalg.qr(gaussian(2, (5, 5)))[0]
    D = gaussian(3, (5, 8))
    assert certifier.drip_constant(M, D, 2).delta == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_drip_identity_equals_rip(certifier, k):
    M = gaussian(30, (6, 10)) / math.sqrt(6)
    drip = certifier.drip_constant(M, np.eye(10), k)
    rip = certifier.rip_constant(M, k)
    assert abs(drip.delta - rip.delta) <= 1e-10
    assert drip.flavor is RipFlavor.D_RIP


def test_drip_witness_reproduces_delta(certifier):
    M = gaussian(31, (6, 8)) / math.sqrt(6)
    D = gaussian(32, (8, 12))
    constant = certifier.drip_constant(M, D, 2)
    assert drip_witness_delta(M, D, constant.witness_support, constant.rel_tol) == pytest.approx(constant.delta, abs=1e-10)


def test_drip_lower_bounded_by_random_unit_vectors(certifier):
    M = gaussian(33, (6, 8)) / math.sqrt(6)
    D = gaussian(34, (8, 12))
    constant = certifier.drip_constant(M, D, 2)
    T = constant.witness_support.as_array()
    coefficients = gaussian(35, (2, 20000))
    x = D[:, T] @ coefficients
    x /= np.linalg.norm(x, axis=0)
    sampled = np.max(np.abs(np.sum((M @ x) ** 2, axis=0) - 1.0))
    assert sampled <= constant.delta + 1e-10
    assert sampled >= constant.delta - 1e-3


def test_drip_permutation_invariance(certifier):
    M = gaussian(36, (6, 8)) / math.sqrt(6)
    D = gaussian(37, (8, 10))
    permutation = np.random.default_rng(0).permutation(10)
    assert certifier.drip_constant(M, D[:, permutation], 2).delta == pytest.approx(
        certifier.drip_constant(M, D, 2).delta, abs=1e-12)


@pytest.mark.parametrize("M, k, expected", [
    (np.eye(3), 2, (1.0, 1.0)),
    (2.0 * np.eye(3), 2, (4.0, 4.0)),
    (np.array([[1.0, 1.0]]), 2, (0.0, 2.0)),
    (np.array([[1.0, 1.0]]), 1, (1.0, 1.0)),
])
def test_isometry_extremes_on_identity_dictionary(certifier, M, k, expected):
    lowest, highest = certifier.isometry_extremes(M, np.eye(M.shape[1]), k)
    assert (lowest, highest) == pytest.approx(expected, abs=1e-12)


def test_balanced_scale_gives_drip_from_extremes(certifier):
    M = gaussian(38, (4, 5))
    D = gaussian(39, (5, 7))
    lowest, highest = certifier.isometry_extremes(M, D, 2)
    assert 0.0 < lowest < highest
    scaled = math.sqrt(2.0 / (lowest + highest)) * M
    assert certifier.drip_constant(scaled, D, 2).delta == pytest.approx(
        (highest - lowest) / (highest + lowest), abs=1e-10)


def test_rip_implies_spark_bound(certifier):
    A = gaussian(40, (6, 10)) / math.sqrt(6)
    spark = certifier.spark(A, 7)
    for k in range(1, 5):
        if certifier.rip_constant(A, k).delta < 1.0:
            assert k < spark.value


def _certificate(value, exhausted_up_to=None):
    if value == INFINITE:
        return SparkCertificate(INFINITE, None, exhausted_up_to)
    return SparkCertificate(value, Support(tuple(range(value))), value - 1)


@pytest.mark.parametrize("k, spark, holds", [
    (1, 4, True),
    (1, 2, False),
    (0, 1, True),
    (2, 4, False),
])
def test_check_uniqueness_finite(k, spark, holds):
    report = check_uniqueness_representation(k, _certificate(spark))
    assert report.holds is holds
    assert not report.inconclusive
    assert report.kind is BoundKind.UNIQUENESS_REPRESENTATION
    assert report.bound_value is None


def test_check_uniqueness_infinite():
    assert check_uniqueness_signal(2, _certificate(INFINITE, exhausted_up_to=4)).holds
    inconclusive = check_uniqueness_signal(3, _certificate(INFINITE, exhausted_up_to=4))
    assert inconclusive.inconclusive
    assert not inconclusive.holds
    assert inconclusive.kind is BoundKind.UNIQUENESS_SIGNAL


def test_check_uniqueness_rejects_negative_k():
    with pytest.raises(InvalidInputError):
        check_uniqueness_signal(-1, _certificate(3))


@pytest.mark.parametrize("epsilon, delta, bound", [
    (0.0, 0.5, 0.0),
    (1.0, 0.0, 2.0),
    (1.0, 0.75, 4.0),
])
def test_stability_bound(epsilon, delta, bound):
    report = stability_bound(epsilon, delta, RecoveryDomain.SIGNAL)
    assert report.holds
    assert report.bound_value == pytest.approx(bound)
    assert report.kind is BoundKind.STABILITY_SIGNAL


def test_stability_bound_without_hypothesis():
    report = stability_bound(0.1, 1.0, "representation")
    assert not report.holds
    assert report.bound_value is None
    assert report.kind is BoundKind.STABILITY_REPRESENTATION


def test_certificate_records():
    D = Dictionary(np.array([[1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]))
    record = Certifier().spark(D.matrix, 2).to_record()
    assert record == {
        "kind": "spark",
        "value": 2,
        "witness": [0, 1],
        "exhausted_up_to": 1,
        "rel_tol": 1e-10,
        "budget_used": 6,
    }
