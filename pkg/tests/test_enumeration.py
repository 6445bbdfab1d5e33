import itertools
from math import comb

import numpy as np
import pytest

from signal_recovery.enumeration import CHUNK_SIZE, SearchLimits, SupportSearch
from signal_recovery.errors import BudgetExceededError, InvalidInputError


@pytest.mark.parametrize("kwargs", [
    {"rel_tol": 0.0},
    {"rel_tol": 1.0},
    {"budget": 0},
    {"workers": 0},
])
def test_search_limits_validation(kwargs):
    with pytest.raises(InvalidInputError):
        SearchLimits(**kwargs)


@pytest.mark.parametrize("n, t", [(7, 3), (20, 4), (5, 5)])
def test_chunks_are_lexicographic_and_complete(n, t):
    chunks = list(SupportSearch(n).chunks(t))
    assert all(chunk.shape[0] <= CHUNK_SIZE for chunk in chunks)
    supports = [tuple(row) for chunk in chunks for row in chunk.tolist()]
    assert supports == list(itertools.combinations(range(n), t))


def test_chunks_reject_bad_size():
    with pytest.raises(InvalidInputError):
        list(SupportSearch(4).chunks(0))
    with pytest.raises(InvalidInputError):
        list(SupportSearch(4).chunks(5))


def test_budget_exceeded_names_the_count():
    search = SupportSearch(20, SearchLimits(budget=100))
    with pytest.raises(BudgetExceededError) as excinfo:
        search.reserve(3)
    assert excinfo.value.required == comb(20, 3) == 1140
    assert "C(20, 3) = 1140" in str(excinfo.value)
    assert excinfo.value.exit_code == 3


def test_budget_accumulates_across_sizes():
    search = SupportSearch(6, SearchLimits(budget=21))
    assert search.all(1, lambda s: np.zeros(len(s), dtype=bool)) == []
    assert search.used == 6
    search.all(2, lambda s: np.zeros(len(s), dtype=bool))
    assert search.used == 21
    with pytest.raises(BudgetExceededError):
        search.all(3, lambda s: np.zeros(len(s), dtype=bool))


def _contains_both(a, b):
    return lambda supports: np.any(supports == a, axis=1) & np.any(supports == b, axis=1)


@pytest.mark.parametrize("workers", [1, 3])
def test_first_is_lexicographically_first(workers):
    search = SupportSearch(20, SearchLimits(workers=workers))
    hit = search.first(4, _contains_both(17, 18))
    assert hit.tolist() == [0, 1, 17, 18]


@pytest.mark.parametrize("workers", [1, 4])
def test_all_collects_in_order(workers):
    search = SupportSearch(20, SearchLimits(workers=workers))
    hits = search.all(3, _contains_both(2, 19))
    assert [h.tolist() for h in hits] == [[0, 2, 19], [1, 2, 19]] + [[2, j, 19] for j in range(3, 19)]
    assert search.used == comb(20, 3)


def test_first_returns_none_without_hit():
    assert SupportSearch(5).first(2, lambda s: np.zeros(len(s), dtype=bool)) is None


@pytest.mark.parametrize("workers", [1, 2])
def test_argmax_prefers_first_on_ties(workers):
    search = SupportSearch(20, SearchLimits(workers=workers))
    # Score depends only on the largest index, so every support ending in 19 ties.
    score, support = search.argmax(3, lambda s: s[:, -1].astype(float))
    assert score == 19.0
    assert support.tolist() == [0, 1, 19]


@pytest.mark.parametrize("workers", [1, 3])
def test_early_exit_counts_only_consumed_chunks(workers):
    search = SupportSearch(20, SearchLimits(workers=workers))
    assert comb(20, 4) > 2 * CHUNK_SIZE
    search.first(4, _contains_both(17, 18))
    assert search.used == CHUNK_SIZE
