"""Budgeted exhaustive enumeration of column supports.

Supports of one size are visited in lexicographic order, cut into fixed-size
chunks. Chunks may be evaluated by several threads, but every reduction is
done in chunk order, so results never depend on the worker count.
"""
import concurrent.futures
import itertools
import logging
from dataclasses import dataclass
from math import comb
from typing import Callable, Iterator, List, Optional, Tuple

import numpy as np

from .errors import BudgetExceededError, InvalidInputError
from .linalg import DEFAULT_REL_TOL

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 5_000_000
CHUNK_SIZE = 2048


@dataclass(frozen=True)
class SearchLimits:
    """Shared knobs for every exhaustive search."""
    rel_tol: float = DEFAULT_REL_TOL
    budget: int = DEFAULT_BUDGET
    workers: int = 1

    def __post_init__(self):
        if not 0.0 < self.rel_tol < 1.0:
            raise InvalidInputError(f"rel_tol must lie in (0, 1), got {self.rel_tol}")
        if self.budget <= 0:
            raise InvalidInputError(f"budget must be positive, got {self.budget}")
        if self.workers <= 0:
            raise InvalidInputError(f"workers must be positive, got {self.workers}")


class SupportSearch:
    """One budgeted search over supports of [0, n); tracks evaluations spent."""

    def __init__(self, n: int, limits: SearchLimits = SearchLimits()):
        self.n = n
        self.limits = limits
        self.used = 0

    def reserve(self, t: int):
        """Fails loudly if enumerating every size-t support could pass the ceiling."""
        if self.used + comb(self.n, t) > self.limits.budget:
            raise BudgetExceededError(self.n, t, self.limits.budget, self.used)

    def chunks(self, t: int) -> Iterator[np.ndarray]:
        """Size-t supports as (batch, t) index arrays in lexicographic order."""
        if t < 1 or t > self.n:
            raise InvalidInputError(f"support size {t} out of range for n={self.n}")
        combos = itertools.combinations(range(self.n), t)
        while True:
            flat = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, CHUNK_SIZE)), dtype=np.intp)
            if flat.size == 0:
                return
            yield flat.reshape(-1, t)

    def _evaluated(self, t: int, evaluate: Callable[[np.ndarray], np.ndarray]) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Yields (chunk, evaluation) in chunk order, evaluating `workers` chunks at a time.

        `used` counts a chunk only when it is handed to the caller, so a search
        that stops early reports the same count for every worker setting.
        """
        self.reserve(t)
        chunks = self.chunks(t)
        workers = self.limits.workers
        if workers == 1:
            for chunk in chunks:
                result = evaluate(chunk)
                self.used += chunk.shape[0]
                yield chunk, result
            return
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            while True:
                wave = list(itertools.islice(chunks, workers))
                if not wave:
                    return
                for chunk, result in zip(wave, executor.map(evaluate, wave)):
                    self.used += chunk.shape[0]
                    yield chunk, result

    def first(self, t: int, evaluate: Callable[[np.ndarray], np.ndarray]) -> Optional[np.ndarray]:
        """Lexicographically first size-t support whose evaluation is True, or None."""
        for chunk, hits in self._evaluated(t, evaluate):
            found = np.flatnonzero(hits)
            if found.size:
                return chunk[found[0]]
        return None

    def all(self, t: int, evaluate: Callable[[np.ndarray], np.ndarray]) -> List[np.ndarray]:
        """Every size-t support whose evaluation is True, in lexicographic order."""
        found = []
        for chunk, hits in self._evaluated(t, evaluate):
            found.extend(chunk[np.flatnonzero(hits)])
        return found

    def argmax(self, t: int, score: Callable[[np.ndarray], np.ndarray]) -> Tuple[float, np.ndarray]:
        """Largest score over size-t supports; ties go to the lexicographically first."""
        best_score = -np.inf
        best_support = None
        for chunk, scores in self._evaluated(t, score):
            i = int(np.argmax(scores))
            if scores[i] > best_score:
                best_score = float(scores[i])
                best_support = chunk[i]
        return best_score, best_support
