"""Dense real linear algebra shared by every other module.

Single matrices go through scipy.linalg; the batched helpers work on stacks of
column submatrices shaped (batch, rows, t) and back the exhaustive support
searches in `certify` and `solvers`.
"""
import logging
from pathlib import Path
from typing import Tuple

import numpy as np
import scipy.linalg as la

from .errors import InvalidInputError, MatrixFormatError

logger = logging.getLogger(__name__)

DEFAULT_REL_TOL = 1e-10


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Validates and converts `A` to a finite, nonempty float64 2-D array."""
    arr = np.asarray(A, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise InvalidInputError(f"{name} has a zero dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf entries")
    return arr


def as_vector(v, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains NaN or Inf entries")
    return arr


def _check_rel_tol(rel_tol: float):
    if not 0.0 < rel_tol < 1.0:
        raise InvalidInputError(f"rel_tol must lie in (0, 1), got {rel_tol}")


def extremal_singular_values(A) -> Tuple[float, float]:
    """Returns (sigma_max, sigma_min) over the min(rows, cols) singular values of A."""
    A = as_matrix(A)
    s = la.svdvals(A)
    return float(s[0]), float(s[-1])


def numeric_rank(A, rel_tol: float = DEFAULT_REL_TOL) -> int:
    """Counts singular values strictly above rel_tol * sigma_max(A)."""
    _check_rel_tol(rel_tol)
    A = as_matrix(A)
    s = la.svdvals(A)
    return int(np.count_nonzero(s > rel_tol * s[0]))


def orthonormal_range_basis(A, rel_tol: float = DEFAULT_REL_TOL) -> np.ndarray:
    """Orthonormal basis of range(A); a rows x 0 array when A is the zero matrix."""
    _check_rel_tol(rel_tol)
    A = as_matrix(A)
    return la.orth(A, rcond=rel_tol)


def least_squares(A, y, rel_tol: float = DEFAULT_REL_TOL) -> Tuple[np.ndarray, float]:
    """Minimum-norm minimizer of ||Av - y||_2 and the attained residual."""
    A = as_matrix(A)
    y = as_vector(y, "y")
    if A.shape[0] != y.shape[0]:
        raise InvalidInputError(f"least_squares: A has {A.shape[0]} rows but y has length {y.shape[0]}")
    v, _, _, _ = la.lstsq(A, y, cond=rel_tol)
    residual = float(np.linalg.norm(A @ v - y))
    return v, residual


# Batched kernels over stacks of column submatrices.

def column_stacks(A: np.ndarray, supports: np.ndarray) -> np.ndarray:
    """Gathers A[:, T] for every row T of `supports` into a (batch, rows, t) stack."""
    return np.ascontiguousarray(A[:, supports].transpose(1, 0, 2))


def batched_singular_values(stacks: np.ndarray) -> np.ndarray:
    """Singular values (descending) of every matrix in the stack."""
    return np.linalg.svd(stacks, compute_uv=False)


def batched_rank(stacks: np.ndarray, rel_tol: float = DEFAULT_REL_TOL, scale=None) -> np.ndarray:
    """Numeric ranks of a stack.

    The cutoff is rel_tol times `scale` (one value per matrix) when given,
    otherwise rel_tol times each matrix's own sigma_max.
    """
    s = batched_singular_values(stacks)
    reference = s[:, 0] if scale is None else np.broadcast_to(np.asarray(scale, dtype=np.float64), s.shape[:1])
    return np.count_nonzero(s > rel_tol * reference[:, None], axis=1)


def batched_range_bases(stacks: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """Orthonormal range bases of a stack, zero-padded to a common width.

    Returns (bases, ranks); bases[b, :, :ranks[b]] spans range(stacks[b]) and
    the remaining columns are zero.
    """
    U, s, _ = np.linalg.svd(stacks, full_matrices=False)
    keep = s > rel_tol * s[:, :1]
    return U * keep[:, None, :], np.count_nonzero(keep, axis=1)


def batched_gram_extremes(stacks: np.ndarray, ranks=None) -> Tuple[np.ndarray, np.ndarray]:
    """Smallest and largest eigenvalues of B^T B for every B in the stack.

    With `ranks`, columns at positions >= rank are treated as absent: their
    diagonal Gram entry is set to 1, which never moves max(lmax - 1, 1 - lmin).
    """
    gram = np.matmul(stacks.transpose(0, 2, 1), stacks)
    if ranks is not None:
        t = gram.shape[-1]
        batch_idx, col_idx = np.nonzero(np.arange(t)[None, :] >= np.asarray(ranks)[:, None])
        gram[batch_idx, col_idx, col_idx] = 1.0
    eig = np.linalg.eigvalsh(gram)
    return eig[:, 0], eig[:, -1]


def batched_least_squares(stacks: np.ndarray, y: np.ndarray, rel_tol: float = DEFAULT_REL_TOL) -> Tuple[np.ndarray, np.ndarray]:
    """Minimum-norm least squares of every matrix in the stack against one y.

    Returns (coefficients of shape (batch, t), residual norms of shape (batch,)).
    """
    U, s, Vt = np.linalg.svd(stacks, full_matrices=False)
    keep = s > rel_tol * s[:, :1]
    inv_s = np.divide(1.0, s, out=np.zeros_like(s), where=keep)
    projected = np.einsum("brp,r->bp", U, y) * inv_s
    coefficients = np.einsum("bpt,bp->bt", Vt, projected)
    fitted = np.einsum("brt,bt->br", stacks, coefficients)
    residuals = np.linalg.norm(fitted - y[None, :], axis=1)
    return coefficients, residuals


# Text formats: `rows cols` header then one row per line (.mat),
# `len` header then one value per line (.vec). 17 significant digits.

def _format(x: float) -> str:
    return f"{x:.17g}"


def write_matrix(path: Path, A) -> Path:
    A = as_matrix(A)
    lines = [f"{A.shape[0]} {A.shape[1]}"]
    lines.extend(" ".join(_format(x) for x in row) for row in A)
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug(f"Wrote {A.shape[0]}x{A.shape[1]} matrix to {path}")
    return path


def read_matrix(path: Path) -> np.ndarray:
    path = Path(path)
    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise MatrixFormatError(path, "empty file")
    try:
        rows, cols = (int(tok) for tok in lines[0].split())
    except ValueError:
        raise MatrixFormatError(path, f"bad header {lines[0]!r}, expected 'rows cols'", line=1)
    if rows <= 0 or cols <= 0:
        raise MatrixFormatError(path, f"non-positive dimensions {rows}x{cols}", line=1)
    if len(lines) - 1 != rows:
        raise MatrixFormatError(path, f"expected {rows} rows, found {len(lines) - 1}")
    data = np.empty((rows, cols), dtype=np.float64)
    for i, line in enumerate(lines[1:]):
        tokens = line.split()
        if len(tokens) != cols:
            raise MatrixFormatError(path, f"expected {cols} entries, found {len(tokens)}", line=i + 2)
        try:
            data[i] = [float(tok) for tok in tokens]
        except ValueError as e:
            raise MatrixFormatError(path, str(e), line=i + 2)
    if not np.all(np.isfinite(data)):
        raise MatrixFormatError(path, "matrix contains NaN or Inf entries")
    return data


def write_vector(path: Path, v) -> Path:
    v = as_vector(v)
    lines = [str(v.shape[0])]
    lines.extend(_format(x) for x in v)
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_vector(path: Path) -> np.ndarray:
    path = Path(path)
    lines = [line.strip() for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise MatrixFormatError(path, "empty file")
    try:
        length = int(lines[0])
    except ValueError:
        raise MatrixFormatError(path, f"bad header {lines[0]!r}, expected 'len'", line=1)
    if len(lines) - 1 != length:
        raise MatrixFormatError(path, f"expected {length} entries, found {len(lines) - 1}")
    try:
        data = np.array([float(tok) for tok in lines[1:]], dtype=np.float64)
    except ValueError as e:
        raise MatrixFormatError(path, str(e))
    if not np.all(np.isfinite(data)):
        raise MatrixFormatError(path, "vector contains NaN or Inf entries")
    return data
