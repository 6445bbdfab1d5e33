"""Sparse recovery solvers: the exhaustive l0 oracle, basis pursuit (l1), and
recovery assessment in the representation and signal domains."""
import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
import scipy.linalg as la
from scipy.optimize import linprog

from .enumeration import SearchLimits, SupportSearch
from .errors import ConfigError, InfeasibleError, InvalidInputError
from .linalg import as_matrix, as_vector, batched_least_squares, column_stacks, least_squares
from .model import ProblemInstance, SparseCoefficients, Support

logger = logging.getLogger(__name__)

# Absolute slack on the l0 feasibility test ||y - A alpha||_2 <= epsilon.
L0_SLACK = 1e-12
DEFAULT_RECOVERY_RTOL = 1e-4
# Iterations over which the primal-dual objective must settle within obj_tol.
OBJECTIVE_WINDOW = 10


class L1Method(str, Enum):
    HIGHS = "highs"
    PRIMAL_DUAL = "primal-dual"


@dataclass
class SolverParams:
    feas_tol: float = 1e-8
    obj_tol: float = 1e-7
    max_iterations: int = 50000
    epsilon: float = 0.0
    method: L1Method = L1Method.HIGHS

    def __post_init__(self):
        try:
            self.method = L1Method(self.method)
        except ValueError:
            raise ConfigError(f"unknown l1 method {self.method!r}, expected one of "
                              f"{[m.value for m in L1Method]}")
        if self.feas_tol <= 0 or self.obj_tol <= 0:
            raise ConfigError(f"solver tolerances must be positive, got feas_tol={self.feas_tol}, "
                              f"obj_tol={self.obj_tol}")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations <= 0:
            raise ConfigError(f"max_iterations must be a positive integer, got {self.max_iterations}")
        if self.epsilon < 0:
            raise ConfigError(f"epsilon must be nonnegative, got {self.epsilon}")
        self.max_iterations = int(self.max_iterations)

    @classmethod
    def from_dict(cls, data: Optional[Dict[str, Any]]) -> "SolverParams":
        data = dict(data or {})
        unknown = set(data) - {"feas_tol", "obj_tol", "max_iterations", "epsilon", "method"}
        if unknown:
            raise ConfigError(f"unknown solver parameters: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["method"] = self.method.value
        return record


@dataclass(eq=False)
class L0Solution:
    minimizers: List[SparseCoefficients]
    cardinality: int
    residuals: List[float] = field(default_factory=list)

    def to_record(self) -> Dict[str, Any]:
        return {
            "cardinality": self.cardinality,
            "minimizers": [alpha.to_dict() for alpha in self.minimizers],
            "residuals": self.residuals,
        }


@dataclass(eq=False)
class L1Solution:
    alpha_hat: np.ndarray
    objective: float
    feasibility_residual: float
    iterations: int
    converged: bool
    method: L1Method = L1Method.HIGHS

    def to_record(self) -> Dict[str, Any]:
        return {
            "alpha_hat": [float(v) for v in self.alpha_hat],
            "objective": self.objective,
            "feasibility_residual": self.feasibility_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "method": self.method.value,
        }


@dataclass(frozen=True)
class RecoveryOutcome:
    rep_error: float
    sig_error: float
    rep_success: bool
    sig_success: bool
    thresholds_echo: Dict[str, float] = field(default_factory=dict)


def _check_system(A, y):
    A = as_matrix(A, "A")
    y = as_vector(y, "y")
    if A.shape[0] != y.shape[0]:
        raise InvalidInputError(f"A has {A.shape[0]} rows but y has length {y.shape[0]}")
    return A, y


class L0Solver:
    """Exhaustive search for the sparsest alpha with ||y - A alpha||_2 <= epsilon."""

    def __init__(self, limits: SearchLimits = SearchLimits()):
        self.limits = limits

    def solve(self, A, y, epsilon: float = 0.0, k_max: Optional[int] = None,
              enumerate_all: bool = False) -> L0Solution:
        A, y = _check_system(A, y)
        n = A.shape[1]
        k_max = n if k_max is None else k_max
        if not 1 <= k_max <= n:
            raise InvalidInputError(f"k_max must lie in [1, {n}], got {k_max}")
        if epsilon < 0:
            raise InvalidInputError(f"epsilon must be nonnegative, got {epsilon}")
        threshold = epsilon + L0_SLACK
        rel_tol = self.limits.rel_tol

        y_norm = float(np.linalg.norm(y))
        if y_norm <= threshold:
            return L0Solution([SparseCoefficients.zero(n)], 0, [y_norm])

        def feasible(supports: np.ndarray) -> np.ndarray:
            return batched_least_squares(column_stacks(A, supports), y, rel_tol)[1] <= threshold

        search = SupportSearch(n, self.limits)
        for t in range(1, k_max + 1):
            if enumerate_all:
                hits = search.all(t, feasible)
            else:
                first = search.first(t, feasible)
                hits = [] if first is None else [first]
            if hits:
                supports = np.stack(hits)
                coefficients, residuals = batched_least_squares(column_stacks(A, supports), y, rel_tol)
                minimizers = [SparseCoefficients(n, Support(tuple(s)), c) for s, c in zip(supports, coefficients)]
                logger.debug(f"l0 minimal cardinality {t} with {len(minimizers)} minimizer(s), "
                             f"{search.used} supports evaluated")
                return L0Solution(minimizers, t, [float(r) for r in residuals])
        raise InfeasibleError(f"no support of size <= {k_max} fits y within epsilon={epsilon}")


def soft_threshold(x: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def _project_ball(v: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    offset = v - center
    distance = float(np.linalg.norm(offset))
    if distance <= radius:
        return v
    return center + offset * (radius / distance)


class L1Solver:
    """Basis pursuit: minimize ||alpha||_1 subject to ||A alpha - y||_2 <= epsilon.

    The noiseless problem goes to HiGHS as a linear program on
    alpha = u - v (u, v >= 0) unless the primal-dual method is requested;
    epsilon > 0 always runs the primal-dual iteration.
    """

    def __init__(self, params: SolverParams = None):
        self.params = params or SolverParams()

    def solve(self, A, y) -> L1Solution:
        A, y = _check_system(A, y)
        params = self.params
        if params.epsilon > 0 or params.method is L1Method.PRIMAL_DUAL:
            solution = self._solve_primal_dual(A, y, params.epsilon)
        else:
            solution = self._solve_highs(A, y)
        if solution.converged:
            logger.debug(f"l1 ({solution.method.value}) converged in {solution.iterations} iterations, "
                         f"objective {solution.objective:.6g}, residual {solution.feasibility_residual:.3g}")
        else:
            logger.warning(f"l1 ({solution.method.value}) stopped after {solution.iterations} iterations "
                           f"with residual {solution.feasibility_residual:.3g}")
        return solution

    def _result(self, A, y, alpha, iterations, tolerance, converged, method) -> L1Solution:
        residual = float(np.linalg.norm(A @ alpha - y))
        return L1Solution(alpha, float(np.abs(alpha).sum()), residual, int(iterations),
                          bool(converged and residual <= tolerance), method)

    def _polish(self, A, y, alpha) -> np.ndarray:
        """Re-solves A_T alpha_T = y on the LP support to remove solver round-off."""
        support = np.flatnonzero(np.abs(alpha) > 1e-9 * max(1.0, float(np.abs(alpha).max(initial=0.0))))
        if support.size == 0 or support.size > A.shape[0]:
            return alpha
        values, residual = least_squares(A[:, support], y)
        if residual > np.linalg.norm(A @ alpha - y):
            return alpha
        polished = np.zeros_like(alpha)
        polished[support] = values
        return polished

    def _solve_highs(self, A, y) -> L1Solution:
        m, n = A.shape
        result = linprog(
            np.ones(2 * n),
            A_eq=np.hstack([A, -A]),
            b_eq=y,
            bounds=(0, None),
            method="highs",
            options={"maxiter": self.params.max_iterations},
        )
        if result.status == 2:
            raise InfeasibleError(f"basis pursuit is infeasible: y is not in the range of A ({result.message})")
        if result.x is None:
            return self._result(A, y, np.zeros(n), result.nit, self.params.feas_tol, False, L1Method.HIGHS)
        alpha = result.x[:n] - result.x[n:]
        alpha = self._polish(A, y, alpha)
        return self._result(A, y, alpha, result.nit, self.params.feas_tol, result.status == 0, L1Method.HIGHS)

    def _solve_primal_dual(self, A, y, epsilon: float) -> L1Solution:
        """First-order primal-dual iteration on min ||alpha||_1 + indicator(||A alpha - y|| <= epsilon)."""
        params = self.params
        n = A.shape[1]
        tolerance = epsilon + params.feas_tol
        norm_A = float(la.svdvals(A)[0])
        alpha = np.zeros(n)
        if norm_A == 0.0:
            if np.linalg.norm(y) > epsilon:
                raise InfeasibleError("A is zero and ||y|| exceeds epsilon")
            return self._result(A, y, alpha, 0, tolerance, True, L1Method.PRIMAL_DUAL)
        tau = sigma = 0.99 / norm_A
        extrapolated = alpha.copy()
        dual = np.zeros(A.shape[0])
        objectives = deque(maxlen=OBJECTIVE_WINDOW)
        converged = False
        iteration = 0
        for iteration in range(1, params.max_iterations + 1):
            q = dual + sigma * (A @ extrapolated)
            dual = q - sigma * _project_ball(q / sigma, y, epsilon)
            updated = soft_threshold(alpha - tau * (A.T @ dual), tau)
            extrapolated = 2.0 * updated - alpha
            alpha = updated
            objectives.append(float(np.abs(alpha).sum()))
            if len(objectives) < OBJECTIVE_WINDOW:
                continue
            drift = (max(objectives) - min(objectives)) / max(1.0, objectives[-1])
            if drift <= params.obj_tol and np.linalg.norm(A @ alpha - y) <= tolerance:
                converged = True
                break
        return self._result(A, y, alpha, iteration, tolerance, converged, L1Method.PRIMAL_DUAL)


def assess_recovery(alpha_hat, instance: ProblemInstance, rep_rtol: float = DEFAULT_RECOVERY_RTOL,
                    sig_rtol: float = DEFAULT_RECOVERY_RTOL) -> RecoveryOutcome:
    """Representation error ||alpha_hat - alpha0|| and signal error ||D alpha_hat - x0||."""
    alpha_hat = as_vector(alpha_hat, "alpha_hat")
    if alpha_hat.shape[0] != instance.D.n:
        raise InvalidInputError(f"alpha_hat has length {alpha_hat.shape[0]} but the dictionary has "
                                f"{instance.D.n} atoms")
    if rep_rtol <= 0 or sig_rtol <= 0:
        raise InvalidInputError(f"recovery tolerances must be positive, got {rep_rtol}, {sig_rtol}")
    alpha0 = instance.alpha0.densify()
    rep_error = float(np.linalg.norm(alpha_hat - alpha0))
    sig_error = float(np.linalg.norm(instance.D.matrix @ alpha_hat - instance.x0))
    rep_threshold = rep_rtol * max(1.0, float(np.linalg.norm(alpha0)))
    sig_threshold = sig_rtol * max(1.0, float(np.linalg.norm(instance.x0)))
    return RecoveryOutcome(
        rep_error,
        sig_error,
        rep_error <= rep_threshold,
        sig_error <= sig_threshold,
        {"rep_rtol": rep_rtol, "sig_rtol": sig_rtol, "rep_threshold": rep_threshold,
         "sig_threshold": sig_threshold},
    )
