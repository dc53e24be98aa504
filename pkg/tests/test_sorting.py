import itertools
from fractions import Fraction

import pytest

from common import Rng
from sorting import (
    expected_comparisons_exact,
    expected_comparisons_fraction,
    exhaustive_mean_comparisons,
    pair_compared,
    quicksort_experiment,
    quicksort_first_pivot,
    quicksort_violations,
    random_permutation,
)
from utils import InvalidInputError


def test_small_trace():
    trace = quicksort_first_pivot([2, 1, 3])
    assert trace.output == [1, 2, 3]
    assert trace.comparisons == 2


@pytest.mark.parametrize('arr', [[], [4]])
def test_trivial_inputs(arr):
    trace = quicksort_first_pivot(arr)
    assert trace.output == list(arr)
    assert trace.comparisons == 0


@pytest.mark.parametrize('n', [1, 2, 10, 200, 1500])
def test_sorted_input_is_quadratic(n):
    assert quicksort_first_pivot(list(range(1, n + 1))).comparisons == n * (n - 1) // 2


def test_duplicates_rejected():
    with pytest.raises(InvalidInputError):
        quicksort_first_pivot([1, 2, 1])


@pytest.mark.parametrize('n, expected', [(0, Fraction(0)), (1, Fraction(0)), (2, Fraction(1)), (3, Fraction(8, 3))])
def test_formula_small_values(n, expected):
    assert expected_comparisons_fraction(n) == expected
    assert expected_comparisons_exact(n) == pytest.approx(float(expected), abs=1e-12)


@pytest.mark.parametrize('n', range(0, 9))
def test_exhaustive_mean_equals_formula(n):
    assert exhaustive_mean_comparisons(n) == expected_comparisons_fraction(n)


def test_exhaustive_limit():
    with pytest.raises(InvalidInputError):
        exhaustive_mean_comparisons(9)


def test_comparisons_invariant_under_order_preserving_relabel():
    rng = Rng(4)
    for _ in range(50):
        perm = random_permutation(30, rng)
        relabeled = [10 * v + 7 for v in perm]
        assert quicksort_first_pivot(perm).comparisons == quicksort_first_pivot(relabeled).comparisons
        assert quicksort_first_pivot(relabeled).output == sorted(relabeled)


def test_pair_probability_is_two_over_gap():
    # Exact over all permutations of 1..6: pair (i, j) is compared in 2/(j-i+1) of them
    n = 6
    perms = list(itertools.permutations(range(1, n + 1)))
    for i, j in [(1, 2), (1, 6), (2, 5), (3, 4)]:
        hits = sum(pair_compared(p, i, j) for p in perms)
        assert Fraction(hits, len(perms)) == Fraction(2, j - i + 1)


def test_monte_carlo_mean_at_100():
    records = quicksort_experiment([100], trials=10_000, seed=11)
    assert records[0].stats['relative_error'] < 0.02
    assert quicksort_violations(records) == []


def test_experiment_columns():
    record = quicksort_experiment([20], trials=5, seed=0)[0]
    assert record.columns()[:3] == ['experiment', 'n', 'seed']
    assert {'trial_mean', 'exact_formula', 'relative_error'} <= set(record.stats)
