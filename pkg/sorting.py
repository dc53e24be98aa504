"""
Deterministic QuickSort with the first element as pivot, instrumented to
count pivot comparisons, and the exact average comparison count on random
permutations.
"""
import math
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import FrozenSet, List, Optional, Sequence, Set

from common import ExperimentRecord, Rng, mean_and_stderr, run_trials
from utils import InvalidInputError, setup_logging

logger = setup_logging(__name__)

EXHAUSTIVE_LIMIT = 8


@dataclass
class SortTrace:
    """
    Result of one QuickSort run.

    Attributes:
        output: Sorted copy of the input
        comparisons: Number of pivot-versus-element comparisons
        pairs: Compared value pairs, only filled when requested
    """
    output: List[int]
    comparisons: int
    pairs: Optional[Set[FrozenSet[int]]] = None


def quicksort_first_pivot(arr: Sequence[int], record_pairs: bool = False) -> SortTrace:
    """
    Sort distinct integers with first-element-pivot QuickSort.

    Each call compares every non-pivot element of its range with the pivot
    exactly once, then rewrites the range as smaller elements, pivot, larger
    elements, keeping the relative order inside each side.

    Args:
        arr: Distinct integers
        record_pairs: Also collect the set of compared value pairs

    Returns:
        SortTrace with the sorted output and the comparison count

    Raises:
        InvalidInputError: If arr contains duplicates
    """
    if len(set(arr)) != len(arr):
        raise InvalidInputError("QuickSort input must consist of distinct elements")

    buffer = list(arr)
    comparisons = 0
    pairs: Optional[Set[FrozenSet[int]]] = set() if record_pairs else None

    # Explicit stack of inclusive index ranges; sorted inputs recurse n deep
    stack = [(0, len(buffer) - 1)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 1:
            continue
        pivot = buffer[lo]
        smaller, larger = [], []
        for value in buffer[lo + 1:hi + 1]:
            comparisons += 1
            if pairs is not None:
                pairs.add(frozenset((pivot, value)))
            (smaller if value < pivot else larger).append(value)
        split = lo + len(smaller)
        buffer[lo:hi + 1] = smaller + [pivot] + larger
        stack.append((split + 1, hi))
        stack.append((lo, split - 1))

    return SortTrace(output=buffer, comparisons=comparisons, pairs=pairs)


def expected_comparisons_exact(n: int) -> float:
    """
    Expected comparisons on a uniformly random permutation of 1..n.

    Sums 2/(j-i+1) over pairs i < j, grouped by distance d = j - i.
    """
    if n < 0:
        raise InvalidInputError(f"n must be >= 0, got {n}")
    return math.fsum(2.0 * (n - d) / (d + 1) for d in range(1, n))


def expected_comparisons_fraction(n: int) -> Fraction:
    """Same sum as expected_comparisons_exact, in rational arithmetic."""
    if n < 0:
        raise InvalidInputError(f"n must be >= 0, got {n}")
    return sum((Fraction(2 * (n - d), d + 1) for d in range(1, n)), Fraction(0))


def exhaustive_mean_comparisons(n: int) -> Fraction:
    """Mean comparison count over all n! permutations of 1..n."""
    if not 0 <= n <= EXHAUSTIVE_LIMIT:
        raise InvalidInputError(f"Exhaustive enumeration supports 0 <= n <= {EXHAUSTIVE_LIMIT}, got {n}")
    total = 0
    count = 0
    for perm in itertools.permutations(range(1, n + 1)):
        total += quicksort_first_pivot(perm).comparisons
        count += 1
    return Fraction(total, count)


def pair_compared(arr: Sequence[int], a: int, b: int) -> bool:
    """Whether values a and b are ever compared while sorting arr."""
    return frozenset((a, b)) in quicksort_first_pivot(arr, record_pairs=True).pairs


def random_permutation(n: int, rng: Rng) -> List[int]:
    return [v + 1 for v in rng.permutation(n)]


def quicksort_experiment(ns: Sequence[int], trials: int, seed: int, workers: int = 0) -> List[ExperimentRecord]:
    """
    Mean comparisons over random permutations, against the exact formula.

    Args:
        ns: Array sizes to sweep
        trials: Permutations per size
        seed: Master seed
        workers: Thread count for trial fan-out

    Returns:
        One record per size
    """
    records = []
    for n in ns:
        logger.info(f"QuickSort experiment: n={n}, {trials} trials")

        def trial(index: int, rng: Rng):
            trace = quicksort_first_pivot(random_permutation(n, rng))
            return trace.comparisons, trace.output == list(range(1, n + 1))

        results = run_trials(trial, seed, trials, workers)
        counts = [c for c, _ in results]
        mean, stderr = mean_and_stderr(counts)
        exact = expected_comparisons_exact(n)
        records.append(ExperimentRecord(
            experiment='quicksort',
            params={'n': n},
            seed=seed,
            stats={
                'trial_mean': mean,
                'trial_stderr': stderr,
                'exact_formula': exact,
                'relative_error': abs(mean - exact) / exact if exact > 0 else 0.0,
                'max_comparisons': float(max(counts)),
                'unsorted_trials': float(sum(1 for _, ok in results if not ok)),
            },
        ))
    return records


def quicksort_violations(records: Sequence[ExperimentRecord]) -> List[str]:
    """Sizes where some output was unsorted or the comparison bound was exceeded."""
    problems = []
    for record in records:
        n = record.params['n']
        if record.stats['unsorted_trials'] > 0:
            problems.append(f"n={n}: {int(record.stats['unsorted_trials'])} unsorted outputs")
        if record.stats['max_comparisons'] > n * (n - 1) / 2:
            problems.append(f"n={n}: {record.stats['max_comparisons']} comparisons exceed n(n-1)/2")
    return problems


if __name__ == '__main__':
    for n in range(1, 7):
        print(n, exhaustive_mean_comparisons(n), expected_comparisons_fraction(n))
