"""Phase-diagram experiment and theorem verification suites.

The phase grid measures, for every (gamma, rho) cell, how often basis pursuit
recovers the representation alpha0 and how often it recovers the signal
x0 = D alpha0 under the coherent two-part dictionary. The suites check the
uniqueness and stability theorems at a scale where every certificate and
every l0 minimizer can be computed exactly.
"""
import concurrent.futures
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .certify import (
    Certifier,
    RecoveryDomain,
    check_uniqueness_representation,
    check_uniqueness_signal,
    stability_bound,
)
from .enumeration import SearchLimits
from .errors import ConfigError, InvalidInputError, SignalRecoveryError
from .model import (
    Dictionary,
    MeasurementOperator,
    ProblemInstance,
    gen_duplicated_dictionary,
    gen_gaussian_measurement,
    gen_noise,
    gen_paper_dictionary,
    gen_signal_atom,
    gen_sparse_representation,
)
from .result_store import CellStatus, ResultStore
from .rng import RngStream, StreamPurpose
from .solvers import DEFAULT_RECOVERY_RTOL, L0Solver, L1Solver, SolverParams, assess_recovery
from .utils import canonical_json, stable_hash

logger = logging.getLogger(__name__)

GRID_GAMMAS = [round(0.1 * i, 2) for i in range(1, 11)]
GRID_RHOS = [round(0.02 * i, 2) for i in range(1, 11)]

CSV_COLUMNS = ["gamma", "rho", "m", "k", "trials", "rep_rate", "sig_rate",
               "mean_rep_err", "mean_sig_err", "solver_dnf", "status"]

# Floors absorb representation error in products like 0.3 * 100.
_FLOOR_SLACK = 1e-9


def grid_dimensions(d: int, gamma: float, rho: float):
    """m = floor(gamma d), k = floor(rho m)."""
    m = int(math.floor(gamma * d + _FLOOR_SLACK))
    k = int(math.floor(rho * m + _FLOOR_SLACK))
    return m, k


@dataclass(frozen=True)
class GridCell:
    index: int
    gamma: float
    rho: float
    m: int
    k: int


@dataclass
class PhaseGridConfig:
    d: int = 100
    gamma_list: List[float] = field(default_factory=lambda: list(GRID_GAMMAS))
    rho_list: List[float] = field(default_factory=lambda: list(GRID_RHOS))
    trials: int = 25
    master_seed: int = 0
    rep_rtol: float = DEFAULT_RECOVERY_RTOL
    sig_rtol: float = DEFAULT_RECOVERY_RTOL
    solver: SolverParams = field(default_factory=SolverParams)

    def __post_init__(self):
        if isinstance(self.solver, dict):
            self.solver = SolverParams.from_dict(self.solver)
        self.gamma_list = [float(g) for g in self.gamma_list]
        self.rho_list = [float(r) for r in self.rho_list]

    @classmethod
    def desk_scale(cls, master_seed: int = 0) -> "PhaseGridConfig":
        return cls(d=100, trials=25, master_seed=master_seed)

    @classmethod
    def full_scale(cls, master_seed: int = 0) -> "PhaseGridConfig":
        return cls(d=1000, trials=100, master_seed=master_seed)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PhaseGridConfig":
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown phase grid keys: {sorted(unknown)}")
        try:
            config = cls(**data)
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid phase grid config: {e}")
        config.validate()
        return config

    @classmethod
    def from_json_file(cls, path: Path) -> "PhaseGridConfig":
        with open(path, 'r', encoding='utf-8') as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError(f"{path}: invalid JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["solver"] = self.solver.to_dict()
        return record

    def validate(self):
        if self.d < 4 or self.d % 2:
            raise ConfigError(f"d must be an even integer >= 4, got {self.d}")
        if not self.gamma_list or not self.rho_list:
            raise ConfigError("gamma_list and rho_list must be nonempty")
        if len(set(self.gamma_list)) != len(self.gamma_list) or len(set(self.rho_list)) != len(self.rho_list):
            raise ConfigError("gamma_list and rho_list must not contain duplicates")
        for gamma in self.gamma_list:
            if not 0.0 < gamma <= 1.0:
                raise ConfigError(f"gamma must lie in (0, 1], got {gamma}")
            if grid_dimensions(self.d, gamma, 0.0)[0] < 1:
                raise ConfigError(f"gamma={gamma} gives m=0 measurements for d={self.d}")
        for rho in self.rho_list:
            if not 0.0 < rho < 1.0:
                raise ConfigError(f"rho must lie in (0, 1), got {rho}")
        if self.trials < 1:
            raise ConfigError(f"trials must be positive, got {self.trials}")
        if not 0 <= self.master_seed < 1 << 64:
            raise ConfigError(f"master_seed must be a 64-bit unsigned integer, got {self.master_seed}")
        if self.rep_rtol <= 0 or self.sig_rtol <= 0:
            raise ConfigError(f"recovery tolerances must be positive, got {self.rep_rtol}, {self.sig_rtol}")

    def cells(self) -> List[GridCell]:
        """Grid cells, indexed gamma-major in configuration order."""
        cells = []
        for gi, gamma in enumerate(self.gamma_list):
            for ri, rho in enumerate(self.rho_list):
                m, k = grid_dimensions(self.d, gamma, rho)
                cells.append(GridCell(gi * len(self.rho_list) + ri, gamma, rho, m, k))
        return cells

    def run_key(self) -> str:
        return stable_hash(self.to_dict())


@dataclass(frozen=True)
class TrialOutcome:
    rep_success: bool = False
    sig_success: bool = False
    rep_error: float = math.nan
    sig_error: float = math.nan
    dnf: bool = False


@dataclass(frozen=True)
class CellResult:
    gamma: float
    rho: float
    m: int
    k: int
    trials_run: int
    rep_success_rate: float
    sig_success_rate: float
    mean_rep_error: float
    mean_sig_error: float
    solver_dnf_count: int
    status: CellStatus = CellStatus.SUCCESS

    @classmethod
    def aggregate(cls, cell: GridCell, outcomes: Sequence[TrialOutcome]) -> "CellResult":
        """Solver failures count as unsuccessful trials and are left out of the mean errors."""
        trials = len(outcomes)
        finished = [o for o in outcomes if not o.dnf]
        rep_errors = [o.rep_error for o in finished]
        sig_errors = [o.sig_error for o in finished]
        return cls(
            cell.gamma, cell.rho, cell.m, cell.k, trials,
            sum(o.rep_success for o in finished) / trials,
            sum(o.sig_success for o in finished) / trials,
            math.fsum(rep_errors) / len(rep_errors) if rep_errors else math.nan,
            math.fsum(sig_errors) / len(sig_errors) if sig_errors else math.nan,
            trials - len(finished),
        )

    @classmethod
    def failed(cls, cell: GridCell) -> "CellResult":
        """Row for a cell whose evaluation raised; no trial statistics exist."""
        return cls(cell.gamma, cell.rho, cell.m, cell.k, 0, math.nan, math.nan, math.nan, math.nan, 0,
                   CellStatus.FAILED)

    def to_row(self) -> Dict[str, Any]:
        return {
            "gamma": self.gamma, "rho": self.rho, "m": self.m, "k": self.k,
            "trials": self.trials_run,
            "rep_rate": self.rep_success_rate, "sig_rate": self.sig_success_rate,
            "mean_rep_err": self.mean_rep_error, "mean_sig_err": self.mean_sig_error,
            "solver_dnf": self.solver_dnf_count,
            "status": self.status.value,
        }

    @classmethod
    def from_row(cls, row: Dict[str, Any]) -> "CellResult":
        return cls(float(row["gamma"]), float(row["rho"]), int(row["m"]), int(row["k"]), int(row["trials"]),
                   float(row["rep_rate"]), float(row["sig_rate"]),
                   float(row["mean_rep_err"]), float(row["mean_sig_err"]), int(row["solver_dnf"]),
                   CellStatus(row.get("status", CellStatus.SUCCESS.value)))


def run_phase_trial(config: PhaseGridConfig, cell: GridCell, trial: int) -> TrialOutcome:
    """One noiseless realization: fresh D, M and alpha0, then basis pursuit on A = M D."""
    stream = RngStream(config.master_seed, cell.index * config.trials + trial)
    try:
        D = gen_paper_dictionary(config.d, stream.derive(StreamPurpose.DICTIONARY))
        M = gen_gaussian_measurement(cell.m, config.d, stream.derive(StreamPurpose.MEASUREMENT))
        alpha0 = gen_sparse_representation(D.n, cell.k, stream.derive(StreamPurpose.REPRESENTATION))
        instance = ProblemInstance.build(D, M, alpha0)
        solution = L1Solver(config.solver).solve(instance.effective_matrix(), instance.y)
    except (SignalRecoveryError, ValueError, np.linalg.LinAlgError) as e:
        logger.warning(f"Trial {trial} of cell (gamma={cell.gamma}, rho={cell.rho}) failed: {e}")
        return TrialOutcome(dnf=True)
    if not solution.converged:
        return TrialOutcome(dnf=True)
    outcome = assess_recovery(solution.alpha_hat, instance, config.rep_rtol, config.sig_rtol)
    return TrialOutcome(outcome.rep_success, outcome.sig_success, outcome.rep_error, outcome.sig_error)


class PhaseExperiment:
    """Runs a phase grid as a resumable pipeline: register cells, evaluate pending ones, collect."""

    def __init__(self, config: PhaseGridConfig, store: Optional[ResultStore] = None,
                 max_workers: int = 1, batch_size: int = 100):
        config.validate()
        self.config = config
        self.store = store or ResultStore.in_memory()
        self.max_workers = max_workers
        self.batch_size = batch_size
        self.run_key = config.run_key()
        self.failed_cells = 0
        self._cells = {cell.index: cell for cell in config.cells()}

    def run_cell(self, gamma: float, rho: float) -> CellResult:
        for cell in self._cells.values():
            if cell.gamma == gamma and cell.rho == rho:
                return self.evaluate_cell(cell)
        raise InvalidInputError(f"(gamma={gamma}, rho={rho}) is not a cell of the configured grid")

    def evaluate_cell(self, cell: GridCell) -> CellResult:
        trials = range(self.config.trials)
        if self.max_workers == 1:
            outcomes = [run_phase_trial(self.config, cell, i) for i in trials]
        else:
            with concurrent.futures.ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                outcomes = list(executor.map(lambda i: run_phase_trial(self.config, cell, i), trials))
        return CellResult.aggregate(cell, outcomes)

    def run_grid(self) -> List[CellResult]:
        self.store.initialize()
        self._phase_register()
        self._phase_evaluate()
        return self._phase_collect()

    def _phase_register(self):
        logger.info(f"Phase 1: Registering {len(self._cells)} cells for run {self.run_key[:12]}...")
        self.store.register_run(self.run_key, canonical_json(self.config.to_dict()))
        for cell in self._cells.values():
            self.store.add_cell(self.run_key, cell.index, cell.gamma, cell.rho, cell.m, cell.k)
        # Failed cells from an earlier run are retried once.
        for record in self.store.get_cells_by_status(self.run_key, [CellStatus.FAILED], limit=len(self._cells)):
            self.store.update_status(record['id'], CellStatus.NEW)

    def _phase_evaluate(self):
        logger.info("Phase 2: Evaluating pending cells...")
        done = len(self.store.get_cells_by_status(self.run_key, [CellStatus.SUCCESS], limit=len(self._cells)))
        if done:
            logger.info(f"Reusing {done} completed cells")
        while True:
            records = self.store.get_cells_by_status(self.run_key, [CellStatus.NEW], limit=self.batch_size)
            if not records:
                break
            for record in records:
                cell = self._cells[record['cell_index']]
                try:
                    result = self.evaluate_cell(cell)
                    self.store.save_result(record['id'], result.to_row())
                    logger.info(f"Cell gamma={cell.gamma} rho={cell.rho} (m={cell.m}, k={cell.k}): "
                                f"rep {result.rep_success_rate:.2f}, sig {result.sig_success_rate:.2f}, "
                                f"dnf {result.solver_dnf_count}")
                except Exception as e:
                    logger.error(f"Error evaluating cell gamma={cell.gamma} rho={cell.rho}: {e}")
                    self.store.update_status(record['id'], CellStatus.FAILED, str(e))

    def _phase_collect(self) -> List[CellResult]:
        """Completed cells plus a FAILED row for every cell that raised."""
        logger.info("Phase 3: Collecting results...")
        results = [CellResult.from_row(row) for row in self.store.get_results(self.run_key)]
        failed = self.store.get_cells_by_status(self.run_key, [CellStatus.FAILED], limit=len(self._cells))
        self.failed_cells = len(failed)
        if self.failed_cells:
            logger.warning(f"{self.failed_cells} of {len(self._cells)} cells failed and are reported with status FAILED")
        results.extend(CellResult.failed(self._cells[record['cell_index']]) for record in failed)
        return sorted(results, key=lambda r: (r.gamma, r.rho))


def results_frame(cells: Sequence[CellResult]) -> pd.DataFrame:
    return pd.DataFrame([cell.to_row() for cell in cells], columns=CSV_COLUMNS)


def write_results_csv(cells: Sequence[CellResult], path: Path) -> Path:
    results_frame(cells).to_csv(path, index=False, float_format="%.17g")
    return Path(path)


def read_results_csv(path: Path) -> List[CellResult]:
    frame = pd.read_csv(path)
    return [CellResult.from_row(row) for row in frame.to_dict(orient="records")]


# Theorem verification suites

SUITE_D = 8
SUITE_COMBINATIONS = 4
SUITE_N = SUITE_D + SUITE_COMBINATIONS
SUITE_M = 6
SIGNAL_AGREEMENT_TOL = 1e-8
DELTA_AGREEMENT_TOL = 1e-10
BOUND_SLACK = 1e-10
# Streams a suite may draw per requested instance while looking for ones that meet the hypothesis.
MAX_DRAWS_PER_INSTANCE = 20


class CheckStatus(str, Enum):
    PASSED = "PASSED"
    VIOLATED = "VIOLATED"
    HYPOTHESIS_NOT_MET = "HYPOTHESIS_NOT_MET"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class CheckResult:
    status: CheckStatus
    ratio: float = 0.0


@dataclass
class SuiteReport:
    suite: str
    master_seed: int
    instances: int
    streams_drawn: int = 0
    checked: int = 0
    violations: int = 0
    hypothesis_not_met: int = 0
    inconclusive: int = 0
    max_ratio: float = 0.0
    violating_streams: List[int] = field(default_factory=list)

    @classmethod
    def collect(cls, suite: str, master_seed: int, per_instance: Sequence[Tuple[int, Sequence[CheckResult]]],
                rejected: int = 0) -> "SuiteReport":
        """`rejected` counts drawn streams dropped because their hypothesis did not hold."""
        report = cls(suite, master_seed, len(per_instance), len(per_instance) + rejected,
                     hypothesis_not_met=rejected)
        for stream_id, checks in per_instance:
            for check in checks:
                if check.status is CheckStatus.HYPOTHESIS_NOT_MET:
                    report.hypothesis_not_met += 1
                    continue
                if check.status is CheckStatus.INCONCLUSIVE:
                    report.inconclusive += 1
                    continue
                report.checked += 1
                report.max_ratio = max(report.max_ratio, check.ratio)
                if check.status is CheckStatus.VIOLATED:
                    report.violations += 1
                    if stream_id not in report.violating_streams:
                        report.violating_streams.append(stream_id)
        return report

    def to_record(self) -> Dict[str, Any]:
        return asdict(self)


def _suite_k(stream_id: int) -> int:
    return 1 + stream_id % 2


def _suite_dictionary(stream: RngStream) -> Dictionary:
    """Alternates pairs of instances between the two-part dictionary and a duplicated atom."""
    if (stream.stream_id // 2) % 2:
        z = gen_signal_atom(SUITE_D, stream.derive(StreamPurpose.SIGNAL_ATOM))
        return gen_duplicated_dictionary(z, SUITE_N)
    return gen_paper_dictionary(SUITE_D, stream.derive(StreamPurpose.DICTIONARY), SUITE_COMBINATIONS)


def _suite_instance(stream: RngStream, D: Dictionary, k: int, epsilon: float = 0.0) -> ProblemInstance:
    M = gen_gaussian_measurement(SUITE_M, D.d, stream.derive(StreamPurpose.MEASUREMENT), normalized=True)
    alpha0 = gen_sparse_representation(D.n, k, stream.derive(StreamPurpose.REPRESENTATION))
    e = gen_noise(SUITE_M, epsilon, stream.derive(StreamPurpose.NOISE))
    return ProblemInstance.build(D, M, alpha0, e, epsilon)


def _calibrated(instance: ProblemInstance, certifier: Certifier, t: int) -> ProblemInstance:
    """Rescales M, e and epsilon by c with c^2 = 2 / (lowest + highest) isometry extreme over size-t supports.

    The feasible set ||y - M D alpha|| <= epsilon, and so every l0 minimizer,
    is unchanged; the rescaled delta_t is (highest - lowest) / (highest + lowest).
    """
    lowest, highest = certifier.isometry_extremes(instance.M, instance.D, t)
    if lowest <= 0.0:
        return instance
    c = math.sqrt(2.0 / (lowest + highest))
    return ProblemInstance.build(instance.D, MeasurementOperator(c * instance.M.matrix), instance.alpha0,
                                 c * instance.e, c * instance.epsilon)


def _bounded_check(error: float, bound: float, scale: float) -> CheckResult:
    violated = error > bound + BOUND_SLACK * max(1.0, scale)
    if bound > 0:
        ratio = error / bound
    else:
        ratio = math.inf if violated else 0.0
    return CheckResult(CheckStatus.VIOLATED if violated else CheckStatus.PASSED, ratio)


def _run_suite(name: str, n_instances: int, master_seed: int, limits: SearchLimits,
               check_instance: Callable[[RngStream, SearchLimits], List[CheckResult]],
               redraw: bool = True) -> SuiteReport:
    """Evaluates `n_instances` seeded instances in stream order.

    With `redraw`, a stream whose checks include HYPOTHESIS_NOT_MET is dropped
    and the next stream is drawn in its place, up to MAX_DRAWS_PER_INSTANCE
    streams per requested instance.
    """
    if n_instances < 1:
        raise InvalidInputError(f"instance count must be positive, got {n_instances}")
    inner = replace(limits, workers=1)

    def run_one(stream_id: int) -> List[CheckResult]:
        stream = RngStream(master_seed, stream_id)
        try:
            return check_instance(stream, inner)
        except SignalRecoveryError as e:
            logger.warning(f"{name} suite: instance {stream_id} could not be decided: {e}")
            return [CheckResult(CheckStatus.INCONCLUSIVE)]

    logger.info(f"Running {name} suite over {n_instances} instances (seed {master_seed})")
    accepted: List[Tuple[int, List[CheckResult]]] = []
    rejected = 0
    next_stream = 0
    max_streams = n_instances * MAX_DRAWS_PER_INSTANCE
    with concurrent.futures.ThreadPoolExecutor(max_workers=limits.workers) as executor:
        # Batch size depends only on the shortfall.
        while len(accepted) < n_instances and next_stream < max_streams:
            batch = range(next_stream, min(next_stream + n_instances - len(accepted), max_streams))
            for stream_id, checks in zip(batch, executor.map(run_one, batch)):
                if redraw and any(check.status is CheckStatus.HYPOTHESIS_NOT_MET for check in checks):
                    rejected += 1
                else:
                    accepted.append((stream_id, checks))
            next_stream = batch.stop
    if len(accepted) < n_instances:
        logger.warning(f"{name} suite: only {len(accepted)} of {n_instances} instances met the hypothesis "
                       f"in {next_stream} streams")
    elif rejected:
        logger.info(f"{name} suite: drew {next_stream} streams, {rejected} did not meet the hypothesis")
    report = SuiteReport.collect(name, master_seed, accepted, rejected)
    if report.violations:
        logger.error(f"{name} suite: {report.violations} violation(s) in streams {report.violating_streams}")
    return report


def verify_uniqueness_suite(n_instances: int, master_seed: int, limits: SearchLimits = SearchLimits()) -> SuiteReport:
    """Every l0 minimizer synthesizes x0 whenever k < D-spark(M) / 2."""

    def check(stream: RngStream, inner: SearchLimits) -> List[CheckResult]:
        k = _suite_k(stream.stream_id)
        instance = _suite_instance(stream, _suite_dictionary(stream), k)
        certificate = Certifier(inner).d_spark(instance.M, instance.D, 2 * k)
        report = check_uniqueness_signal(k, certificate)
        if report.inconclusive:
            return [CheckResult(CheckStatus.INCONCLUSIVE)]
        if not report.holds:
            return [CheckResult(CheckStatus.HYPOTHESIS_NOT_MET)]
        solution = L0Solver(inner).solve(instance.effective_matrix(), instance.y, 0.0, k, enumerate_all=True)
        deviation = max(float(np.linalg.norm(instance.D.matrix @ alpha.densify() - instance.x0))
                        for alpha in solution.minimizers)
        tolerance = SIGNAL_AGREEMENT_TOL * max(1.0, float(np.linalg.norm(instance.x0)))
        status = CheckStatus.VIOLATED if deviation > tolerance else CheckStatus.PASSED
        return [CheckResult(status, deviation / tolerance)]

    return _run_suite("uniqueness", n_instances, master_seed, limits, check)


def verify_stability_suite(n_instances: int, master_seed: int, epsilon: float,
                           limits: SearchLimits = SearchLimits()) -> SuiteReport:
    """||x0 - D alpha_hat|| <= 2 epsilon / sqrt(1 - delta_2k^D) for every noisy l0 minimizer.

    Each instance is rescaled by `_calibrated` first, so delta_2k^D < 1 holds
    whenever 2k < D-spark(M); streams where it still fails are redrawn.
    """
    if epsilon < 0:
        raise InvalidInputError(f"epsilon must be nonnegative, got {epsilon}")

    def check(stream: RngStream, inner: SearchLimits) -> List[CheckResult]:
        k = _suite_k(stream.stream_id)
        certifier = Certifier(inner)
        instance = _calibrated(_suite_instance(stream, _suite_dictionary(stream), k, epsilon), certifier, 2 * k)
        delta = certifier.drip_constant(instance.M, instance.D, 2 * k).delta
        bound = stability_bound(instance.epsilon, delta, RecoveryDomain.SIGNAL)
        if not bound.holds:
            return [CheckResult(CheckStatus.HYPOTHESIS_NOT_MET)]
        solution = L0Solver(inner).solve(instance.effective_matrix(), instance.y, instance.epsilon, k,
                                         enumerate_all=True)
        error = max(float(np.linalg.norm(instance.x0 - instance.D.matrix @ alpha.densify()))
                    for alpha in solution.minimizers)
        return [_bounded_check(error, bound.bound_value, float(np.linalg.norm(instance.x0)))]

    return _run_suite("stability", n_instances, master_seed, limits, check)


def verify_representation_suite(n_instances: int, master_seed: int, epsilon: float,
                                limits: SearchLimits = SearchLimits()) -> SuiteReport:
    """Uniqueness through spark and stability through delta_2k on D = I.

    Two checks per instance: the noiseless l0 minimizer is alpha0 when
    k < spark(M) / 2, and noisy minimizers stay within 2 epsilon / sqrt(1 - delta_2k).
    """
    if epsilon < 0:
        raise InvalidInputError(f"epsilon must be nonnegative, got {epsilon}")
    D = Dictionary.identity(SUITE_N)

    def check(stream: RngStream, inner: SearchLimits) -> List[CheckResult]:
        k = _suite_k(stream.stream_id)
        certifier = Certifier(inner)
        solver = L0Solver(inner)
        checks = []

        noiseless = _suite_instance(stream, D, k)
        A = noiseless.effective_matrix()
        uniqueness = check_uniqueness_representation(k, certifier.spark(A, 2 * k))
        if uniqueness.inconclusive:
            checks.append(CheckResult(CheckStatus.INCONCLUSIVE))
        elif not uniqueness.holds:
            checks.append(CheckResult(CheckStatus.HYPOTHESIS_NOT_MET))
        else:
            alpha0 = noiseless.alpha0.densify()
            solution = solver.solve(A, noiseless.y, 0.0, k, enumerate_all=True)
            deviation = max(float(np.linalg.norm(alpha.densify() - alpha0)) for alpha in solution.minimizers)
            tolerance = SIGNAL_AGREEMENT_TOL * max(1.0, float(np.linalg.norm(alpha0)))
            status = CheckStatus.VIOLATED if deviation > tolerance else CheckStatus.PASSED
            checks.append(CheckResult(status, deviation / tolerance))

        noisy = _calibrated(_suite_instance(stream, D, k, epsilon), certifier, 2 * k)
        A = noisy.effective_matrix()
        bound = stability_bound(noisy.epsilon, certifier.rip_constant(A, 2 * k).delta, RecoveryDomain.REPRESENTATION)
        if not bound.holds:
            checks.append(CheckResult(CheckStatus.HYPOTHESIS_NOT_MET))
        else:
            alpha0 = noisy.alpha0.densify()
            solution = solver.solve(A, noisy.y, noisy.epsilon, k, enumerate_all=True)
            error = max(float(np.linalg.norm(alpha0 - alpha.densify())) for alpha in solution.minimizers)
            checks.append(_bounded_check(error, bound.bound_value, float(np.linalg.norm(alpha0))))
        return checks

    return _run_suite("representation", n_instances, master_seed, limits, check)


def verify_coincidence_suite(n_instances: int, master_seed: int, limits: SearchLimits = SearchLimits()) -> SuiteReport:
    """With D = I the D-quantities reduce to the classical ones.

    Checks d_spark(M, I) = spark(M), drip(M, I, k) = rip(M, k) within 1e-10,
    and that delta_k < 1 forces k < spark (and likewise for the D-versions).
    """
    D = Dictionary.identity(SUITE_N)
    cap = SUITE_M + 1

    def check(stream: RngStream, inner: SearchLimits) -> List[CheckResult]:
        k = _suite_k(stream.stream_id)
        certifier = Certifier(inner)
        M = gen_gaussian_measurement(SUITE_M, SUITE_N, stream.derive(StreamPurpose.MEASUREMENT), normalized=True)
        spark = certifier.spark(M.matrix, cap)
        d_spark = certifier.d_spark(M, D, cap)
        rip = certifier.rip_constant(M.matrix, k).delta
        drip = certifier.drip_constant(M, D, k).delta

        difference = abs(rip - drip)
        checks = [
            CheckResult(CheckStatus.PASSED if spark.value == d_spark.value else CheckStatus.VIOLATED),
            CheckResult(CheckStatus.PASSED if difference <= DELTA_AGREEMENT_TOL else CheckStatus.VIOLATED,
                        difference / DELTA_AGREEMENT_TOL),
        ]
        for delta, certificate in ((rip, spark), (drip, d_spark)):
            if delta >= 1.0:
                checks.append(CheckResult(CheckStatus.HYPOTHESIS_NOT_MET))
            else:
                checks.append(CheckResult(CheckStatus.PASSED if k < certificate.value else CheckStatus.VIOLATED))
        return checks

    return _run_suite("coincidence", n_instances, master_seed, limits, check, redraw=False)
