"""Instance bundles: a directory holding D.mat, M.mat, alpha0.vec, y.vec and meta.json."""
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from .errors import MatrixFormatError
from .linalg import read_matrix, read_vector, write_matrix, write_vector
from .model import Dictionary, MeasurementOperator, ProblemInstance, SparseCoefficients

logger = logging.getLogger(__name__)

D_FILE = "D.mat"
M_FILE = "M.mat"
ALPHA0_FILE = "alpha0.vec"
Y_FILE = "y.vec"
META_FILE = "meta.json"


@dataclass
class InstanceMeta:
    d: int
    n: int
    m: int
    k: int
    epsilon: float = 0.0
    master_seed: Optional[int] = None
    stream_id: Optional[int] = None
    generators: Dict[str, str] = field(default_factory=dict)

    @classmethod
    def describe(cls, instance: ProblemInstance, master_seed: Optional[int] = None,
                 stream_id: Optional[int] = None, **generators: str) -> "InstanceMeta":
        return cls(instance.D.d, instance.D.n, instance.M.m, instance.k, instance.epsilon,
                   master_seed, stream_id, dict(generators))

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "InstanceMeta":
        known = {key: data[key] for key in cls.__dataclass_fields__ if key in data}
        return cls(**known)

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)


def write_instance_bundle(directory: Path, instance: ProblemInstance, meta: InstanceMeta) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_matrix(directory / D_FILE, instance.D.matrix)
    write_matrix(directory / M_FILE, instance.M.matrix)
    write_vector(directory / ALPHA0_FILE, instance.alpha0.densify())
    write_vector(directory / Y_FILE, instance.y)
    with open(directory / META_FILE, "w", encoding="utf-8") as f:
        json.dump(meta.to_json(), f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info(f"Wrote instance bundle to {directory}")
    return directory


def read_instance_bundle(directory: Path) -> Tuple[ProblemInstance, InstanceMeta]:
    """Loads a bundle; the noise is recovered as e = y - M D alpha0."""
    directory = Path(directory)
    meta_path = directory / META_FILE
    try:
        with open(meta_path, "r", encoding="utf-8") as f:
            meta = InstanceMeta.from_json(json.load(f))
    except (json.JSONDecodeError, TypeError) as e:
        raise MatrixFormatError(meta_path, f"invalid metadata: {e}")

    D = Dictionary(read_matrix(directory / D_FILE))
    M = MeasurementOperator(read_matrix(directory / M_FILE))
    alpha0 = SparseCoefficients.from_dense(read_vector(directory / ALPHA0_FILE))
    y = read_vector(directory / Y_FILE)
    if alpha0.n != D.n or M.d != D.d or y.shape[0] != M.m:
        raise MatrixFormatError(directory, f"inconsistent bundle shapes: D {D.matrix.shape}, "
                                           f"M {M.matrix.shape}, alpha0 {alpha0.n}, y {y.shape[0]}")
    x0 = D.submatrix(alpha0.support) @ alpha0.values
    instance = ProblemInstance(D, M, alpha0, x0, y - M.matrix @ x0, y, float(meta.epsilon))
    instance.check()
    return instance, meta
