import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__
from .bundle import InstanceMeta, read_instance_bundle, write_instance_bundle
from .certify import Certifier
from .enumeration import DEFAULT_BUDGET, SearchLimits
from .errors import ConvergenceError, SignalRecoveryError
from .experiment import (
    PhaseExperiment,
    PhaseGridConfig,
    verify_coincidence_suite,
    verify_representation_suite,
    verify_stability_suite,
    verify_uniqueness_suite,
    write_results_csv,
)
from .linalg import DEFAULT_REL_TOL, read_matrix, read_vector, write_matrix, write_vector
from .model import (
    Dictionary,
    ProblemInstance,
    gen_duplicated_dictionary,
    gen_gaussian_measurement,
    gen_noise,
    gen_paper_dictionary,
    gen_signal_atom,
    gen_sparse_representation,
)
from .result_store import DEFAULT_DB_PATH, ResultStore
from .rng import RngStream, StreamPurpose
from .solvers import L0Solver, L1Method, L1Solver, SolverParams, assess_recovery
from .utils import log_execution_time

logger = logging.getLogger(__name__)


def _emit(record: Dict[str, Any]):
    print(json.dumps(record, indent=2, sort_keys=True))


def _limits(args) -> SearchLimits:
    return SearchLimits(rel_tol=args.rel_tol, budget=args.budget, workers=args.threads)


def _dictionary(kind: str, d: int, stream: RngStream, n: Optional[int], combinations: Optional[int]) -> Dictionary:
    if kind == "paper":
        return gen_paper_dictionary(d, stream.derive(StreamPurpose.DICTIONARY), combinations)
    z = gen_signal_atom(d, stream.derive(StreamPurpose.SIGNAL_ATOM))
    return gen_duplicated_dictionary(z, n if n is not None else 2 * d)


def cmd_gen_dict(args) -> int:
    D = _dictionary(args.kind, args.d, RngStream(args.seed), args.n, args.combinations)
    write_matrix(args.out, D.matrix)
    _emit({"path": str(args.out), "rows": D.d, "cols": D.n})
    return 0


def cmd_gen_measurement(args) -> int:
    M = gen_gaussian_measurement(args.m, args.d, RngStream(args.seed).derive(StreamPurpose.MEASUREMENT),
                                 normalized=args.normalized)
    write_matrix(args.out, M.matrix)
    _emit({"path": str(args.out), "rows": M.m, "cols": M.d})
    return 0


def cmd_gen_instance(args) -> int:
    stream = RngStream(args.seed)
    D = _dictionary(args.kind, args.d, stream, args.n, args.combinations)
    M = gen_gaussian_measurement(args.m, args.d, stream.derive(StreamPurpose.MEASUREMENT),
                                 normalized=args.normalized)
    alpha0 = gen_sparse_representation(D.n, args.k, stream.derive(StreamPurpose.REPRESENTATION))
    e = gen_noise(args.m, args.epsilon, stream.derive(StreamPurpose.NOISE))
    instance = ProblemInstance.build(D, M, alpha0, e, args.epsilon)
    meta = InstanceMeta.describe(
        instance, args.seed, 0,
        dictionary=f"{args.kind}-dictionary",
        measurement="gaussian-normalized" if args.normalized else "gaussian",
        representation="uniform-support-gaussian",
        noise="sphere" if args.epsilon > 0 else "none",
    )
    write_instance_bundle(args.out, instance, meta)
    _emit({"path": str(args.out), "d": D.d, "n": D.n, "m": M.m, "k": args.k})
    return 0


def cmd_certify(args) -> int:
    certifier = Certifier(_limits(args))
    if args.kind == "spark":
        result = certifier.spark(read_matrix(args.A), args.cap)
    elif args.kind == "dspark":
        result = certifier.d_spark(read_matrix(args.M), read_matrix(args.D), args.cap)
    elif args.kind == "rip":
        result = certifier.rip_constant(read_matrix(args.A), args.k)
    else:
        result = certifier.drip_constant(read_matrix(args.M), read_matrix(args.D), args.k)
    _emit(result.to_record())
    return 0


def _load_system(args):
    """Returns (A, y, instance or None, epsilon, output directory)."""
    if args.instance is not None:
        instance, meta = read_instance_bundle(args.instance)
        epsilon = args.epsilon if args.epsilon is not None else meta.epsilon
        return instance.effective_matrix(), instance.y, instance, epsilon, args.instance
    epsilon = args.epsilon if args.epsilon is not None else 0.0
    return read_matrix(args.A), read_vector(args.y), None, epsilon, Path(".")


def _ground_truth(record: Dict[str, Any], alpha_hat: np.ndarray, instance: Optional[ProblemInstance]):
    if instance is None:
        return
    outcome = assess_recovery(alpha_hat, instance)
    record.update(rep_error=outcome.rep_error, sig_error=outcome.sig_error,
                  rep_success=outcome.rep_success, sig_success=outcome.sig_success)


def cmd_solve(args) -> int:
    A, y, instance, epsilon, directory = _load_system(args)
    out = args.out or Path(directory) / "alpha_hat.vec"
    if args.kind == "l0":
        solution = L0Solver(_limits(args)).solve(A, y, epsilon, args.k_max, enumerate_all=args.all)
        alpha_hat = solution.minimizers[0].densify()
        record = solution.to_record()
        record["residual"] = solution.residuals[0]
        write_vector(out, alpha_hat)
        _ground_truth(record, alpha_hat, instance)
        record["path"] = str(out)
        _emit(record)
        return 0

    params = SolverParams(feas_tol=args.feas_tol, obj_tol=args.obj_tol, max_iterations=args.max_iterations,
                          epsilon=epsilon, method=args.method)
    solution = L1Solver(params).solve(A, y)
    record = solution.to_record()
    record["residual"] = solution.feasibility_residual
    write_vector(out, solution.alpha_hat)
    _ground_truth(record, solution.alpha_hat, instance)
    record["path"] = str(out)
    _emit(record)
    if not solution.converged:
        raise ConvergenceError(f"l1 solver did not converge within {params.max_iterations} iterations")
    return 0


@log_execution_time("Phase grid")
def cmd_phase(args) -> int:
    config = PhaseGridConfig.from_json_file(args.config) if args.config else PhaseGridConfig.desk_scale()
    if args.memory_db:
        store = ResultStore.in_memory()
        logger.info("Using in-memory database")
    else:
        store = ResultStore.file_db(args.db_path)
        logger.info(f"Using SQLite database at {args.db_path}")
    experiment = PhaseExperiment(config, store, max_workers=args.threads)
    try:
        cells = experiment.run_grid()
    finally:
        store.close()
    write_results_csv(cells, args.out)
    _emit({"path": str(args.out), "cells": len(cells), "failed_cells": experiment.failed_cells})
    return 0


@log_execution_time("Verification suite")
def cmd_verify(args) -> int:
    limits = _limits(args)
    if args.suite == "uniqueness":
        report = verify_uniqueness_suite(args.instances, args.seed, limits)
    elif args.suite == "stability":
        report = verify_stability_suite(args.instances, args.seed, args.eps, limits)
    elif args.suite == "representation":
        report = verify_representation_suite(args.instances, args.seed, args.eps, limits)
    else:
        report = verify_coincidence_suite(args.instances, args.seed, limits)
    _emit(report.to_record())
    return SignalRecoveryError.exit_code if report.violations else 0


def _positive_int(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _nonnegative_float(text: str) -> float:
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative number, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signal-recovery",
                                     description="Sparse recovery under the synthesis model: certificates, "
                                                 "l0/l1 solvers and phase-diagram experiments")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--debug", action="store_true", help="Enable debug logging")
    parser.add_argument("--threads", type=_positive_int, default=os.cpu_count() or 1,
                        help="Worker threads for enumeration, trials and suites (default: all cores)")
    parser.add_argument("--rel-tol", type=float, default=DEFAULT_REL_TOL,
                        help=f"Relative rank tolerance (default: {DEFAULT_REL_TOL})")
    parser.add_argument("--budget", type=_positive_int, default=DEFAULT_BUDGET,
                        help=f"Support enumeration ceiling (default: {DEFAULT_BUDGET})")
    commands = parser.add_subparsers(dest="command", required=True)

    gen_dict = commands.add_parser("gen-dict", help="Generate a dictionary matrix")
    gen_dict.add_argument("--kind", choices=["paper", "dup"], default="paper",
                          help="Two-part coherent dictionary or n copies of one Gaussian atom")
    gen_dict.add_argument("--d", type=_positive_int, required=True, help="Signal dimension")
    gen_dict.add_argument("--n", type=_positive_int, help="Atom count for --kind dup (default: 2d)")
    gen_dict.add_argument("--combinations", type=int, help="Combination atoms for --kind paper (default: d)")
    gen_dict.add_argument("--seed", type=int, default=0, help="Master seed")
    gen_dict.add_argument("--out", type=Path, required=True, help="Output .mat file")
    gen_dict.set_defaults(func=cmd_gen_dict)

    gen_measurement = commands.add_parser("gen-measurement", help="Generate a Gaussian measurement matrix")
    gen_measurement.add_argument("--m", type=_positive_int, required=True, help="Number of measurements")
    gen_measurement.add_argument("--d", type=_positive_int, required=True, help="Signal dimension")
    gen_measurement.add_argument("--seed", type=int, default=0, help="Master seed")
    gen_measurement.add_argument("--normalized", action="store_true", help="Scale entries by 1/sqrt(m)")
    gen_measurement.add_argument("--out", type=Path, required=True, help="Output .mat file")
    gen_measurement.set_defaults(func=cmd_gen_measurement)

    gen_instance = commands.add_parser("gen-instance", help="Generate a problem instance bundle")
    gen_instance.add_argument("--kind", choices=["paper", "dup"], default="paper", help="Dictionary family")
    gen_instance.add_argument("--d", type=_positive_int, required=True, help="Signal dimension")
    gen_instance.add_argument("--m", type=_positive_int, required=True, help="Number of measurements")
    gen_instance.add_argument("--k", type=int, required=True, help="Sparsity of alpha0")
    gen_instance.add_argument("--n", type=_positive_int, help="Atom count for --kind dup (default: 2d)")
    gen_instance.add_argument("--combinations", type=int, help="Combination atoms for --kind paper (default: d)")
    gen_instance.add_argument("--epsilon", type=_nonnegative_float, default=0.0, help="Noise radius")
    gen_instance.add_argument("--normalized", action="store_true", help="Scale M entries by 1/sqrt(m)")
    gen_instance.add_argument("--seed", type=int, default=0, help="Master seed")
    gen_instance.add_argument("--out", type=Path, required=True, help="Output bundle directory")
    gen_instance.set_defaults(func=cmd_gen_instance)

    certify = commands.add_parser("certify", help="Compute an exact Spark/D-Spark/RIP/D-RIP certificate")
    certify.add_argument("kind", choices=["spark", "dspark", "rip", "drip"])
    certify.add_argument("--A", type=Path, help="Matrix for spark/rip")
    certify.add_argument("--M", type=Path, help="Measurement matrix for dspark/drip")
    certify.add_argument("--D", type=Path, help="Dictionary for dspark/drip")
    certify.add_argument("--cap", type=_positive_int, help="Largest support size searched (spark/dspark)")
    certify.add_argument("--k", type=_positive_int, help="Support size (rip/drip)")
    certify.set_defaults(func=cmd_certify)

    solve = commands.add_parser("solve", help="Solve an instance with the l0 oracle or basis pursuit")
    solve.add_argument("kind", choices=["l0", "l1"])
    solve.add_argument("--instance", type=Path, help="Instance bundle directory")
    solve.add_argument("--A", type=Path, help="Effective matrix A = M D")
    solve.add_argument("--y", type=Path, help="Measurement vector")
    solve.add_argument("--epsilon", type=_nonnegative_float, help="Noise radius (default: bundle value or 0)")
    solve.add_argument("--k-max", type=_positive_int, help="Largest cardinality for l0 (default: all columns)")
    solve.add_argument("--all", action="store_true", help="List every l0 minimizer")
    solve.add_argument("--method", choices=[m.value for m in L1Method], default=L1Method.HIGHS.value,
                       help="l1 algorithm (epsilon > 0 always uses primal-dual)")
    solve.add_argument("--feas-tol", type=float, default=SolverParams.feas_tol, help="l1 feasibility tolerance")
    solve.add_argument("--obj-tol", type=float, default=SolverParams.obj_tol, help="l1 objective tolerance")
    solve.add_argument("--max-iterations", type=_positive_int, default=SolverParams.max_iterations,
                       help="l1 iteration cap")
    solve.add_argument("--out", type=Path, help="Output vector (default: alpha_hat.vec next to the input)")
    solve.set_defaults(func=cmd_solve)

    phase = commands.add_parser("phase", help="Run the (gamma, rho) phase grid")
    phase.add_argument("--config", type=Path, help="Grid config JSON (default: desk scale)")
    phase.add_argument("--out", type=Path, required=True, help="Results CSV")
    phase.add_argument("--db-path", type=Path, default=Path(DEFAULT_DB_PATH), help="Path to SQLite database file")
    phase.add_argument("--memory-db", action="store_true", help="Use in-memory database (no persistence)")
    phase.set_defaults(func=cmd_phase)

    verify = commands.add_parser("verify", help="Run a theorem verification suite")
    verify.add_argument("suite", choices=["uniqueness", "stability", "representation", "coincidence"])
    verify.add_argument("--instances", type=_positive_int, default=200, help="Number of seeded instances")
    verify.add_argument("--seed", type=int, default=0, help="Master seed")
    verify.add_argument("--eps", type=_nonnegative_float, default=0.1, help="Noise radius for stability suites")
    verify.set_defaults(func=cmd_verify)
    return parser


def _check_flags(parser: argparse.ArgumentParser, args):
    """Rejects incomplete flag combinations before any file is touched."""
    if args.command == "certify":
        needs = {"spark": ("A", "cap"), "dspark": ("M", "D", "cap"), "rip": ("A", "k"), "drip": ("M", "D", "k")}
        missing = [f"--{name}" for name in needs[args.kind] if getattr(args, name) is None]
        if missing:
            parser.error(f"certify {args.kind} requires {', '.join(missing)}")
    elif args.command == "solve":
        if (args.instance is None) == (args.A is None and args.y is None):
            parser.error("solve takes either --instance or both --A and --y")
        if args.instance is None and (args.A is None or args.y is None):
            parser.error("solve without --instance requires both --A and --y")
    elif args.command in ("gen-dict", "gen-instance"):
        if args.kind == "paper" and args.n is not None:
            parser.error("--n applies to --kind dup only; use --combinations for the two-part dictionary")


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.debug else logging.INFO,
        format='%(asctime)s - %(levelname)s - %(message)s',
        handlers=[
            logging.StreamHandler(sys.stderr)
        ],
        force=True
    )
    _check_flags(parser, args)

    try:
        return args.func(args)
    except SignalRecoveryError as e:
        logger.error(str(e))
        return e.exit_code
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return 1
