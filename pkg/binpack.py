"""
Bin packing: First-Fit Decreasing, Truncate-and-Match, the total-size lower
bound, and the fixed instances used to probe their worst and average case.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from common import ExperimentRecord, Rng, run_trials
from utils import InvalidInputError, setup_logging

logger = setup_logging(__name__)

# Absorbs float summation error in bin loads and the size total
CAPACITY_TOLERANCE = 1e-12
SUM_TOLERANCE = 1e-9

ALGORITHMS = ('ffd', 'tm', 'both')


@dataclass(frozen=True)
class PackingInstance:
    """Item sizes, each in [0, 1]."""
    sizes: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'sizes', tuple(float(s) for s in self.sizes))
        for i, s in enumerate(self.sizes):
            if not 0.0 <= s <= 1.0:
                raise InvalidInputError(f"Item {i} has size {s} outside [0, 1]")

    @property
    def n(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True)
class Packing:
    """Assignment of item indices to bins."""
    bins: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, 'bins', tuple(tuple(b) for b in self.bins))

    def __len__(self) -> int:
        return len(self.bins)


def bin_count(packing: Packing) -> int:
    return len(packing.bins)


def bin_loads(inst: PackingInstance, packing: Packing) -> List[float]:
    return [math.fsum(inst.sizes[i] for i in b) for b in packing.bins]


class _ResidualTree:
    """
    Max segment tree over bin residual capacities.

    Unopened bins hold residual 1, so the leftmost leaf that fits an item is
    either an open bin or the next bin to open.
    """

    def __init__(self, slots: int):
        size = 1
        while size < max(slots, 1):
            size *= 2
        self.size = size
        self.tree = np.ones(2 * size)

    def first_fit(self, need: float) -> int:
        node = 1
        while node < self.size:
            node = 2 * node if self.tree[2 * node] >= need else 2 * node + 1
        return node - self.size

    def consume(self, leaf: int, amount: float) -> None:
        node = leaf + self.size
        self.tree[node] -= amount
        node //= 2
        while node:
            self.tree[node] = max(self.tree[2 * node], self.tree[2 * node + 1])
            node //= 2


def ffd(inst: PackingInstance) -> Packing:
    """
    First-Fit Decreasing.

    Items go in nonincreasing size order (ties by original index) into the
    lowest-indexed bin with enough residual capacity, else into a new bin.

    Args:
        inst: Packing instance

    Returns:
        Packing with bins in opening order
    """
    order = sorted(range(inst.n), key=lambda i: (-inst.sizes[i], i))
    tree = _ResidualTree(inst.n)
    bins: List[List[int]] = []
    for i in order:
        size = inst.sizes[i]
        target = tree.first_fit(size - CAPACITY_TOLERANCE)
        if target == len(bins):
            bins.append([])
        bins[target].append(i)
        tree.consume(target, size)
    return Packing(tuple(tuple(b) for b in bins))


def tm_cutoff(n: int) -> float:
    """Size 1 - 2/n^(1/4) at and above which TM isolates an item."""
    if n < 1:
        raise InvalidInputError(f"n must be >= 1, got {n}")
    return 1.0 - 2.0 / n ** 0.25


def truncate_match(inst: PackingInstance) -> Packing:
    """
    Truncate and Match.

    Items of size at least a positive cutoff get their own bin. A negative
    cutoff isolates everything and a cutoff of exactly 0 (n = 16) isolates
    nothing. The remaining k items, sorted descending, are paired as
    (i, k-i+1) in one bin when they fit together and in two bins otherwise.
    With k odd the middle item is alone.

    Args:
        inst: Packing instance

    Returns:
        Packing listing isolated items first, then pairs in order
    """
    if inst.n == 0:
        return Packing(())
    cutoff = tm_cutoff(inst.n)
    bins: List[Tuple[int, ...]] = []
    rest = []
    for i, size in enumerate(inst.sizes):
        if cutoff < 0 or (cutoff > 0 and size >= cutoff):
            bins.append((i,))
        else:
            rest.append(i)

    rest.sort(key=lambda i: (-inst.sizes[i], i))
    k = len(rest)
    for j in range(k // 2):
        big, small = rest[j], rest[k - 1 - j]
        if inst.sizes[big] + inst.sizes[small] <= 1.0 + CAPACITY_TOLERANCE:
            bins.append((big, small))
        else:
            bins.append((big,))
            bins.append((small,))
    if k % 2:
        bins.append((rest[k // 2],))
    return Packing(tuple(bins))


def size_lower_bound(inst: PackingInstance) -> int:
    """Ceiling of the total size; no packing uses fewer bins."""
    total = math.fsum(inst.sizes)
    return max(0, math.ceil(total - SUM_TOLERANCE))


def validate_packing(inst: PackingInstance, packing: Packing) -> bool:
    """True iff every item is in exactly one bin and no bin exceeds capacity."""
    seen = [0] * inst.n
    for b in packing.bins:
        for i in b:
            if not 0 <= i < inst.n:
                return False
            seen[i] += 1
    if any(count != 1 for count in seen):
        return False
    return all(load <= 1.0 + CAPACITY_TOLERANCE for load in bin_loads(inst, packing))


def exercise3_instance(epsilon: float) -> PackingInstance:
    """
    The 30-item instance on which FFD uses 11 bins and an optimal packing 9.

    Layout: items 0-5 have size 1/2+e, 6-11 have 1/4+2e, 12-17 have 1/4+e,
    18-29 have 1/4-2e.
    """
    if not 0 < epsilon < 0.01:
        raise InvalidInputError(f"epsilon must lie in (0, 1/100), got {epsilon}")
    sizes = ([0.5 + epsilon] * 6 + [0.25 + 2 * epsilon] * 6
             + [0.25 + epsilon] * 6 + [0.25 - 2 * epsilon] * 12)
    return PackingInstance(tuple(sizes))


def exercise3_witness(epsilon: float) -> Packing:
    """Nine full bins for exercise3_instance(epsilon)."""
    exercise3_instance(epsilon)
    triples = [(i, 12 + i, 18 + i) for i in range(6)]
    quads = [(6 + 2 * j, 7 + 2 * j, 24 + 2 * j, 25 + 2 * j) for j in range(3)]
    return Packing(tuple(triples + quads))


def replicated_instance(inst: PackingInstance, copies: int) -> PackingInstance:
    """copies back-to-back copies of an instance."""
    if copies < 1:
        raise InvalidInputError(f"copies must be >= 1, got {copies}")
    return PackingInstance(inst.sizes * copies)


def interval_populations(inst: PackingInstance) -> Dict[str, object]:
    """
    Item counts over n^(1/4) equal subintervals of [0, 1].

    Returns:
        Dict with 'counts', the band [n^(3/4) - sqrt(n), n^(3/4) + sqrt(n)]
        as 'band', and 'within_band' telling whether every count lies in it
    """
    if inst.n == 0:
        raise InvalidInputError("Interval populations need at least one item")
    intervals = max(1, int(round(inst.n ** 0.25)))
    counts, _ = np.histogram(np.asarray(inst.sizes), bins=intervals, range=(0.0, 1.0))
    center = inst.n / intervals
    slack = math.sqrt(inst.n)
    band = (center - slack, center + slack)
    return {
        'counts': counts.tolist(),
        'band': band,
        'within_band': bool(np.all((counts >= band[0]) & (counts <= band[1]))),
    }


def uniform_instance(n: int, rng: Rng) -> PackingInstance:
    return PackingInstance(tuple(rng.random(n).tolist()))


def binpack_trial(n: int, algo: str, seed: int, index: int, rng: Rng) -> ExperimentRecord:
    """Pack one uniform instance with the requested algorithms."""
    inst = uniform_instance(n, rng)
    lower = size_lower_bound(inst)
    packings = {}
    if algo in ('ffd', 'both'):
        packings['ffd'] = ffd(inst)
    if algo in ('tm', 'both'):
        packings['tm'] = truncate_match(inst)
    ffd_bins = float(len(packings['ffd'])) if 'ffd' in packings else math.nan
    tm_bins = float(len(packings['tm'])) if 'tm' in packings else math.nan
    primary = ffd_bins if 'ffd' in packings else tm_bins
    return ExperimentRecord(
        experiment='binpack',
        params={'n': n, 'algo': algo, 'trial': index},
        seed=seed,
        stats={
            'ffd_bins': ffd_bins,
            'tm_bins': tm_bins,
            'lower_bound': float(lower),
            'ratio': primary / lower if lower > 0 else 1.0,
            'invalid_packings': float(sum(1 for p in packings.values() if not validate_packing(inst, p))),
        },
    )


def binpack_experiment(n: int, trials: int, seed: int, algo: str = 'both', workers: int = 0) -> List[ExperimentRecord]:
    """
    One record per uniform random instance.

    Args:
        n: Items per instance
        trials: Number of instances
        seed: Master seed
        algo: 'ffd', 'tm' or 'both'
        workers: Thread count for trial fan-out
    """
    if algo not in ALGORITHMS:
        raise InvalidInputError(f"algo must be one of {ALGORITHMS}, got {algo!r}")
    logger.info(f"Bin packing experiment: n={n}, {trials} trials, algo={algo}")
    return run_trials(lambda index, rng: binpack_trial(n, algo, seed, index, rng), seed, trials, workers)


def binpack_violations(records: Sequence[ExperimentRecord]) -> List[str]:
    """Instances breaking validity, FFD <= TM, or the size lower bound."""
    problems = []
    for r in records:
        label = f"trial {r.params['trial']}"
        s = r.stats
        if s['invalid_packings'] > 0:
            problems.append(f"{label}: invalid packing")
        if not math.isnan(s['ffd_bins']) and s['ffd_bins'] < s['lower_bound']:
            problems.append(f"{label}: FFD used {s['ffd_bins']} bins, below the lower bound {s['lower_bound']}")
        if not math.isnan(s['ffd_bins']) and not math.isnan(s['tm_bins']) and s['ffd_bins'] > s['tm_bins']:
            problems.append(f"{label}: FFD used {s['ffd_bins']} bins, more than TM's {s['tm_bins']}")
    return problems


if __name__ == '__main__':
    inst = exercise3_instance(0.001)
    print(f"FFD bins: {len(ffd(inst))}, witness valid: {validate_packing(inst, exercise3_witness(0.001))}")
