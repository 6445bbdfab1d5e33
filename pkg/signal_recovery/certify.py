"""Exact combinatorial certificates: Spark, D-Spark, RIP and D-RIP constants,
and the uniqueness/stability predicates built on them."""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
import scipy.linalg as la

from .enumeration import SearchLimits, SupportSearch
from .errors import InvalidInputError
from .linalg import (
    as_matrix,
    batched_gram_extremes,
    batched_rank,
    batched_range_bases,
    batched_singular_values,
    column_stacks,
)
from .model import Dictionary, MeasurementOperator, Support

logger = logging.getLogger(__name__)

INFINITE = math.inf


class SparkKind(str, Enum):
    SPARK = "spark"
    D_SPARK = "d-spark"


class RipFlavor(str, Enum):
    RIP = "rip"
    D_RIP = "d-rip"


class BoundKind(str, Enum):
    UNIQUENESS_REPRESENTATION = "uniqueness-representation"
    UNIQUENESS_SIGNAL = "uniqueness-signal"
    STABILITY_REPRESENTATION = "stability-representation"
    STABILITY_SIGNAL = "stability-signal"


class RecoveryDomain(str, Enum):
    REPRESENTATION = "representation"
    SIGNAL = "signal"


@dataclass(frozen=True)
class SparkCertificate:
    """Smallest dependent (or null-space-intersecting) support, or INFINITE up to a cap.

    `exhausted_up_to` is the largest support size that was fully enumerated
    without finding one.
    """
    value: float
    witness: Optional[Support]
    exhausted_up_to: int
    kind: SparkKind = SparkKind.SPARK
    rel_tol: float = 0.0
    budget_used: int = 0

    @property
    def is_infinite(self) -> bool:
        return self.value == INFINITE

    def to_record(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "value": "INFINITE" if self.is_infinite else int(self.value),
            "witness": None if self.witness is None else list(self.witness.indices),
            "exhausted_up_to": self.exhausted_up_to,
            "rel_tol": self.rel_tol,
            "budget_used": self.budget_used,
        }


@dataclass(frozen=True)
class RipConstant:
    k: int
    delta: float
    witness_support: Support
    flavor: RipFlavor = RipFlavor.RIP
    rel_tol: float = 0.0
    budget_used: int = 0

    def to_record(self) -> Dict[str, Any]:
        return {
            "kind": self.flavor.value,
            "k": self.k,
            "delta": self.delta,
            "witness": list(self.witness_support.indices),
            "rel_tol": self.rel_tol,
            "budget_used": self.budget_used,
        }


@dataclass(frozen=True)
class BoundReport:
    kind: BoundKind
    holds: bool
    bound_value: Optional[float] = None
    inputs_echo: Dict[str, Any] = field(default_factory=dict)
    inconclusive: bool = False

    def to_record(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "holds": self.holds,
            "inconclusive": self.inconclusive,
            "bound_value": self.bound_value,
            "inputs": self.inputs_echo,
        }


def _isometry_defect(lmin: np.ndarray, lmax: np.ndarray) -> np.ndarray:
    return np.maximum(lmax - 1.0, 1.0 - lmin)


def _rip_scores(A: np.ndarray, supports: np.ndarray) -> np.ndarray:
    return _isometry_defect(*batched_gram_extremes(column_stacks(A, supports)))


def _drip_extremes(M: np.ndarray, D: np.ndarray, supports: np.ndarray, rel_tol: float):
    bases, ranks = batched_range_bases(column_stacks(D, supports), rel_tol)
    return batched_gram_extremes(np.matmul(M, bases), ranks)


def _drip_scores(M: np.ndarray, D: np.ndarray, supports: np.ndarray, rel_tol: float) -> np.ndarray:
    return _isometry_defect(*_drip_extremes(M, D, supports, rel_tol))


def _dependent(A: np.ndarray, supports: np.ndarray, rel_tol: float) -> np.ndarray:
    return batched_rank(column_stacks(A, supports), rel_tol) < supports.shape[1]


def _null_intersecting(M: np.ndarray, D: np.ndarray, sigma_M: float, supports: np.ndarray, rel_tol: float) -> np.ndarray:
    """rank(M D_T) < rank(D_T), with M D_T measured against sigma_max(M) * sigma_max(D_T)."""
    stacks = column_stacks(D, supports)
    s = batched_singular_values(stacks)
    rank_D = np.count_nonzero(s > rel_tol * s[:, :1], axis=1)
    rank_MD = batched_rank(np.matmul(M, stacks), rel_tol, scale=sigma_M * s[:, 0])
    return rank_MD < rank_D


def _check_size(name: str, value: int, n: int):
    if not 1 <= value <= n:
        raise InvalidInputError(f"{name} must lie in [1, {n}], got {value}")


def _operands(M, D):
    M = M.matrix if isinstance(M, MeasurementOperator) else as_matrix(M, "M")
    D = D.matrix if isinstance(D, Dictionary) else as_matrix(D, "D")
    if M.shape[1] != D.shape[0]:
        raise InvalidInputError(f"M has {M.shape[1]} columns but D has {D.shape[0]} rows")
    return M, D


class Certifier:
    """Computes exact certificates by budgeted exhaustive support enumeration."""

    def __init__(self, limits: SearchLimits = SearchLimits()):
        self.limits = limits

    def spark(self, A, cap: int) -> SparkCertificate:
        A = as_matrix(A)
        _check_size("cap", cap, A.shape[1])
        rel_tol = self.limits.rel_tol
        search = SupportSearch(A.shape[1], self.limits)
        for t in range(1, cap + 1):
            hit = search.first(t, lambda supports: _dependent(A, supports, rel_tol))
            if hit is not None:
                logger.debug(f"spark = {t}, witness {hit.tolist()} after {search.used} evaluations")
                return SparkCertificate(t, Support(tuple(hit)), t - 1, SparkKind.SPARK, rel_tol, search.used)
        logger.debug(f"no dependent support up to size {cap}")
        return SparkCertificate(INFINITE, None, cap, SparkKind.SPARK, rel_tol, search.used)

    def d_spark(self, M, D, cap: int) -> SparkCertificate:
        M, D = _operands(M, D)
        _check_size("cap", cap, D.shape[1])
        rel_tol = self.limits.rel_tol
        sigma_M = float(la.svdvals(M)[0])
        search = SupportSearch(D.shape[1], self.limits)
        for t in range(1, cap + 1):
            hit = search.first(t, lambda supports: _null_intersecting(M, D, sigma_M, supports, rel_tol))
            if hit is not None:
                logger.debug(f"D-spark = {t}, witness {hit.tolist()} after {search.used} evaluations")
                return SparkCertificate(t, Support(tuple(hit)), t - 1, SparkKind.D_SPARK, rel_tol, search.used)
        return SparkCertificate(INFINITE, None, cap, SparkKind.D_SPARK, rel_tol, search.used)

    def rip_constant(self, A, k: int) -> RipConstant:
        A = as_matrix(A)
        _check_size("k", k, A.shape[1])
        search = SupportSearch(A.shape[1], self.limits)
        delta, witness = search.argmax(k, lambda supports: _rip_scores(A, supports))
        return RipConstant(k, max(0.0, delta), Support(tuple(witness)), RipFlavor.RIP,
                           self.limits.rel_tol, search.used)

    def drip_constant(self, M, D, k: int) -> RipConstant:
        M, D = _operands(M, D)
        _check_size("k", k, D.shape[1])
        rel_tol = self.limits.rel_tol
        search = SupportSearch(D.shape[1], self.limits)
        delta, witness = search.argmax(k, lambda supports: _drip_scores(M, D, supports, rel_tol))
        return RipConstant(k, max(0.0, delta), Support(tuple(witness)), RipFlavor.D_RIP,
                           rel_tol, search.used)

    def isometry_extremes(self, M, D, k: int) -> Tuple[float, float]:
        """Smallest and largest ||M x||^2 / ||x||^2 over x in range(D_T), |T| = k.

        Rank-deficient supports contribute 1 on both sides.
        """
        M, D = _operands(M, D)
        _check_size("k", k, D.shape[1])
        rel_tol = self.limits.rel_tol
        search = SupportSearch(D.shape[1], self.limits)
        lowest, _ = search.argmax(k, lambda supports: -_drip_extremes(M, D, supports, rel_tol)[0])
        highest, _ = search.argmax(k, lambda supports: _drip_extremes(M, D, supports, rel_tol)[1])
        return -lowest, highest


# Witness re-verification

def spark_witness_holds(A, certificate: SparkCertificate) -> bool:
    if certificate.is_infinite:
        return certificate.witness is None
    witness = certificate.witness.as_array()[None, :]
    return len(certificate.witness) == certificate.value and bool(
        _dependent(as_matrix(A), witness, certificate.rel_tol)[0])


def d_spark_witness_holds(M, D, certificate: SparkCertificate) -> bool:
    if certificate.is_infinite:
        return certificate.witness is None
    M, D = _operands(M, D)
    witness = certificate.witness.as_array()[None, :]
    sigma_M = float(la.svdvals(M)[0])
    return len(certificate.witness) == certificate.value and bool(
        _null_intersecting(M, D, sigma_M, witness, certificate.rel_tol)[0])


def rip_witness_delta(A, support: Support) -> float:
    return max(0.0, float(_rip_scores(as_matrix(A), support.as_array()[None, :])[0]))


def drip_witness_delta(M, D, support: Support, rel_tol: float) -> float:
    M, D = _operands(M, D)
    return max(0.0, float(_drip_scores(M, D, support.as_array()[None, :], rel_tol)[0]))


# Uniqueness and stability predicates

def _check_uniqueness(kind: BoundKind, k: int, certificate: SparkCertificate) -> BoundReport:
    if k < 0:
        raise InvalidInputError(f"sparsity must be nonnegative, got {k}")
    echo = {"k": k, certificate.kind.value: certificate.to_record()["value"],
            "exhausted_up_to": certificate.exhausted_up_to}
    if certificate.is_infinite and certificate.exhausted_up_to < 2 * k:
        # D-spark > exhausted_up_to is all that is known; k < (exhausted_up_to + 1) / 2 is undecided.
        return BoundReport(kind, False, None, echo, inconclusive=True)
    return BoundReport(kind, k < certificate.value / 2, None, echo)


def check_uniqueness_representation(k: int, spark_md: SparkCertificate) -> BoundReport:
    """k < spark(MD) / 2 makes alpha0 the unique l0 minimizer."""
    return _check_uniqueness(BoundKind.UNIQUENESS_REPRESENTATION, k, spark_md)


def check_uniqueness_signal(k: int, dspark_m: SparkCertificate) -> BoundReport:
    """k < D-spark(M) / 2 makes D alpha_hat = x0 for every l0 minimizer."""
    return _check_uniqueness(BoundKind.UNIQUENESS_SIGNAL, k, dspark_m)


def stability_bound(epsilon: float, delta_2k: float, kind: RecoveryDomain) -> BoundReport:
    """2 epsilon / sqrt(1 - delta_2k) when delta_2k < 1."""
    if epsilon < 0 or delta_2k < 0:
        raise InvalidInputError(f"epsilon and delta must be nonnegative, got {epsilon}, {delta_2k}")
    kind = RecoveryDomain(kind)
    report_kind = (BoundKind.STABILITY_REPRESENTATION if kind is RecoveryDomain.REPRESENTATION
                   else BoundKind.STABILITY_SIGNAL)
    echo = {"epsilon": epsilon, "delta_2k": delta_2k}
    if delta_2k < 1.0:
        return BoundReport(report_kind, True, 2.0 * epsilon / math.sqrt(1.0 - delta_2k), echo)
    return BoundReport(report_kind, False, None, echo)
