import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from .errors import InvalidInputError, InvariantViolation
from .linalg import as_matrix, as_vector
from .rng import RngStream, standard_normal

logger = logging.getLogger(__name__)

# Absolute slack on ||e||_2 <= epsilon, matching the l0 feasibility slack.
NOISE_SLACK = 1e-12
MAX_REDRAWS = 1000


@dataclass(frozen=True)
class Support:
    """Strictly increasing column indices."""
    indices: Tuple[int, ...] = ()

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", indices)
        if any(i < 0 for i in indices):
            raise InvalidInputError(f"support indices must be nonnegative: {indices}")
        if any(a >= b for a, b in zip(indices, indices[1:])):
            raise InvalidInputError(f"support indices must be strictly increasing: {indices}")

    @classmethod
    def of(cls, indices: Iterable[int]) -> "Support":
        indices = [int(i) for i in indices]
        if len(set(indices)) != len(indices):
            raise InvalidInputError(f"duplicate support indices: {indices}")
        return cls(tuple(sorted(indices)))

    @classmethod
    def of_vector(cls, vector, tol: float = 0.0) -> "Support":
        return cls(tuple(np.flatnonzero(np.abs(as_vector(vector)) > tol)))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)


@dataclass(eq=False)
class SparseCoefficients:
    """A coefficient vector alpha of length n stored as (support, values)."""
    n: int
    support: Support = field(default_factory=Support)
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if isinstance(self.support, (list, tuple)):
            # Values follow their indices when an unsorted index list is given.
            if len(self.support) == self.values.shape[0]:
                self.values = self.values[np.argsort(np.asarray(self.support, dtype=np.intp), kind="stable")]
            self.support = Support.of(self.support)
        if self.n <= 0:
            raise InvalidInputError(f"ambient dimension must be positive, got {self.n}")
        if len(self.support) != self.values.shape[0]:
            raise InvalidInputError(
                f"support has {len(self.support)} indices but {self.values.shape[0]} values were given"
            )
        if self.support.indices and self.support.indices[-1] >= self.n:
            raise InvalidInputError(f"support index {self.support.indices[-1]} out of range for n={self.n}")

    @classmethod
    def zero(cls, n: int) -> "SparseCoefficients":
        return cls(n)

    @classmethod
    def from_dense(cls, vector, tol: float = 0.0) -> "SparseCoefficients":
        vector = as_vector(vector)
        support = Support.of_vector(vector, tol)
        return cls(vector.shape[0], support, vector[support.as_array()])

    def densify(self) -> np.ndarray:
        dense = np.zeros(self.n)
        dense[self.support.as_array()] = self.values
        return dense

    def l0_norm(self) -> int:
        return int(np.count_nonzero(self.values))

    def to_dict(self) -> Dict:
        return {"n": self.n, "support": list(self.support.indices), "values": [float(v) for v in self.values]}


@dataclass(eq=False)
class Dictionary:
    """Synthesis dictionary D (d x n); every atom (column) is nonzero."""
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = as_matrix(self.matrix, "dictionary")
        zero_atoms = np.flatnonzero(~np.any(self.matrix != 0.0, axis=0))
        if zero_atoms.size:
            raise InvalidInputError(f"dictionary has all-zero atoms at columns {zero_atoms.tolist()}")

    @classmethod
    def identity(cls, d: int) -> "Dictionary":
        return cls(np.eye(d))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def n(self) -> int:
        return self.matrix.shape[1]

    def submatrix(self, support: Support) -> np.ndarray:
        return self.matrix[:, support.as_array()]


@dataclass(eq=False)
class MeasurementOperator:
    """Measurement matrix M (m x d)."""
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = as_matrix(self.matrix, "measurement operator")

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]


def synthesize(D: Dictionary, alpha: SparseCoefficients) -> np.ndarray:
    """x = D alpha."""
    if alpha.n != D.n:
        raise InvalidInputError(f"coefficients have n={alpha.n} but dictionary has {D.n} atoms")
    return D.submatrix(alpha.support) @ alpha.values


def measure(M: MeasurementOperator, x, e) -> np.ndarray:
    """y = M x + e."""
    x = as_vector(x, "x")
    e = as_vector(e, "e")
    if x.shape[0] != M.d:
        raise InvalidInputError(f"signal has length {x.shape[0]} but M has {M.d} columns")
    if e.shape[0] != M.m:
        raise InvalidInputError(f"noise has length {e.shape[0]} but M has {M.m} rows")
    return M.matrix @ x + e


@dataclass(eq=False)
class ProblemInstance:
    D: Dictionary
    M: MeasurementOperator
    alpha0: SparseCoefficients
    x0: np.ndarray
    e: np.ndarray
    y: np.ndarray
    epsilon: float = 0.0

    @classmethod
    def build(cls, D: Dictionary, M: MeasurementOperator, alpha0: SparseCoefficients,
              e=None, epsilon: float = 0.0) -> "ProblemInstance":
        if M.d != D.d:
            raise InvalidInputError(f"M has {M.d} columns but the dictionary has dimension {D.d}")
        if epsilon < 0:
            raise InvalidInputError(f"epsilon must be nonnegative, got {epsilon}")
        e = np.zeros(M.m) if e is None else as_vector(e, "e")
        x0 = synthesize(D, alpha0)
        y = measure(M, x0, e)
        instance = cls(D, M, alpha0, x0, e, y, float(epsilon))
        instance.check()
        return instance

    def check(self):
        """Asserts y - M x0 = e and ||e||_2 <= epsilon."""
        scale = max(1.0, float(np.linalg.norm(self.y)))
        if not np.allclose(self.y - self.M.matrix @ self.x0, self.e, rtol=0.0, atol=1e-12 * scale):
            raise InvariantViolation("measurement invariant y - M x0 = e does not hold")
        noise = float(np.linalg.norm(self.e))
        if noise > self.epsilon + NOISE_SLACK * max(1.0, self.epsilon):
            raise InvariantViolation(f"noise norm {noise} exceeds epsilon {self.epsilon}")

    def effective_matrix(self) -> np.ndarray:
        """A = M D, the matrix the solvers work on."""
        return self.M.matrix @ self.D.matrix

    @property
    def k(self) -> int:
        return self.alpha0.l0_norm()


# Generators

def _pair(i: int, j: int) -> Tuple[int, int]:
    return (i, j) if i < j else (j, i)


def _closes_small_dependency(i: int, j: int, signs: np.ndarray,
                             atoms_on: Dict[Tuple[int, int], List[np.ndarray]],
                             neighbors: Dict[int, set]) -> bool:
    """True when atom (i, j, signs) would make some set of <= 3 sparse atoms dependent."""
    existing = atoms_on.get((i, j), [])
    if len(existing) >= 2:
        return True
    for other in existing:
        if other[0] * signs[1] == other[1] * signs[0]:
            return True
    for k in neighbors[i] & neighbors[j]:
        rows = {i: 0, j: 1, k: 2}
        for a in atoms_on[_pair(i, k)]:
            for b in atoms_on[_pair(j, k)]:
                block = np.zeros((3, 3))
                block[0, 0], block[1, 0] = signs
                for col, pair, entry in ((1, _pair(i, k), a), (2, _pair(j, k), b)):
                    block[rows[pair[0]], col], block[rows[pair[1]], col] = entry
                if abs(np.linalg.det(block)) < 0.5:
                    return True
    return False


def _draw_sparse_atoms(d: int, gen: np.random.Generator) -> np.ndarray:
    """D1: d atoms with two +-1 entries on distinct rows, no dependent set of <= 3 atoms."""
    D1 = np.zeros((d, d))
    atoms_on: Dict[Tuple[int, int], List[np.ndarray]] = defaultdict(list)
    neighbors: Dict[int, set] = defaultdict(set)
    for col in range(d):
        for _ in range(MAX_REDRAWS):
            i, j = sorted(int(r) for r in gen.choice(d, size=2, replace=False))
            signs = np.where(gen.random(2) < 0.5, -1.0, 1.0)
            if not _closes_small_dependency(i, j, signs, atoms_on, neighbors):
                break
        else:
            raise InvariantViolation(f"could not place sparse atom {col} of a d={d} dictionary")
        D1[i, col], D1[j, col] = signs
        atoms_on[(i, j)].append(signs)
        neighbors[i].add(j)
        neighbors[j].add(i)
    return D1


def paper_dictionary_generators(d: int, rng: RngStream, combinations: Optional[int] = None) -> Tuple[Dictionary, np.ndarray]:
    """Builds D = [D1, D2] and returns it with the (combinations x 3) generator indices of D2."""
    if d < 4 or d % 2:
        raise InvalidInputError(f"the two-part dictionary needs an even d >= 4, got {d}")
    combinations = d if combinations is None else combinations
    if combinations < 0:
        raise InvalidInputError(f"combinations must be nonnegative, got {combinations}")
    gen = rng.generator()
    D1 = _draw_sparse_atoms(d, gen)
    D2 = np.zeros((d, combinations))
    generators = np.zeros((combinations, 3), dtype=np.intp)
    for col in range(combinations):
        triple = np.sort(gen.choice(d, size=3, replace=False))
        for _ in range(MAX_REDRAWS):
            weights = standard_normal(gen, 3)
            atom = D1[:, triple] @ weights
            if np.linalg.norm(atom) > 1e-10 * np.linalg.norm(weights):
                break
        else:
            raise InvariantViolation(f"combination atom {col} stayed numerically zero")
        D2[:, col] = atom
        generators[col] = triple
    logger.debug(f"Generated two-part dictionary d={d}, n={d + combinations}")
    return Dictionary(np.hstack([D1, D2])), generators


def gen_paper_dictionary(d: int, rng: RngStream, combinations: Optional[int] = None) -> Dictionary:
    return paper_dictionary_generators(d, rng, combinations)[0]


def gen_duplicated_dictionary(z, n: int) -> Dictionary:
    """D = [z, z, ..., z] with n copies."""
    z = as_vector(z, "z")
    if n <= 0:
        raise InvalidInputError(f"atom count must be positive, got {n}")
    if not np.any(z != 0.0):
        raise InvalidInputError("duplicated atom z must be nonzero")
    return Dictionary(np.repeat(z[:, None], n, axis=1))


def gen_gaussian_measurement(m: int, d: int, rng: RngStream, normalized: bool = False) -> MeasurementOperator:
    """i.i.d. N(0, 1) entries, or N(0, 1/m) when normalized."""
    if m < 1 or d < 1:
        raise InvalidInputError(f"measurement operator needs m, d >= 1, got {m}x{d}")
    matrix = standard_normal(rng.generator(), (m, d))
    if normalized:
        matrix /= np.sqrt(m)
    return MeasurementOperator(matrix)


def gen_sparse_representation(n: int, k: int, rng: RngStream) -> SparseCoefficients:
    """Uniform size-k support with i.i.d. standard normal nonzeros."""
    if n <= 0 or k < 0:
        raise InvalidInputError(f"invalid sparse representation size n={n}, k={k}")
    if k > n:
        raise InvalidInputError(f"sparsity k={k} exceeds n={n}")
    gen = rng.generator()
    support = Support.of(gen.choice(n, size=k, replace=False)) if k else Support()
    values = standard_normal(gen, k)
    for _ in range(MAX_REDRAWS):
        zeros = values == 0.0
        if not zeros.any():
            break
        values[zeros] = standard_normal(gen, int(zeros.sum()))
    return SparseCoefficients(n, support, values)


def gen_noise(m: int, epsilon: float, rng: RngStream) -> np.ndarray:
    """Noise drawn uniformly on the sphere of radius epsilon."""
    if epsilon < 0:
        raise InvalidInputError(f"epsilon must be nonnegative, got {epsilon}")
    if epsilon == 0:
        return np.zeros(m)
    direction = standard_normal(rng.generator(), m)
    return epsilon * direction / np.linalg.norm(direction)


def gen_signal_atom(d: int, rng: RngStream) -> np.ndarray:
    return standard_normal(rng.generator(), d)


def mutual_coherence(D: Dictionary) -> float:
    """max |<d_i, d_j>| / (||d_i|| ||d_j||) over i != j."""
    if D.n < 2:
        raise InvalidInputError("mutual coherence needs at least two atoms")
    normalized = D.matrix / np.linalg.norm(D.matrix, axis=0)
    gram = np.abs(normalized.T @ normalized)
    np.fill_diagonal(gram, 0.0)
    return float(min(1.0, gram.max()))
