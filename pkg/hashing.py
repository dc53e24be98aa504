"""
Linear-probing hash table with probe instrumentation.

Hash values are supplied by the caller as slot indices in [0, capacity);
experiments draw them uniformly, which is the random-hash-values model.
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from common import ExperimentRecord, Rng, mean_and_stderr, run_trials
from utils import InvalidInputError, setup_logging

logger = setup_logging(__name__)

MASK64 = (1 << 64) - 1
UNIFORM_PROBE_SAMPLES = 1000


def mix64(key: int) -> int:
    """Deterministic 64-bit mixing hash (splitmix64 finaliser). Not used by experiments."""
    z = (key + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def hash_index(key: int, capacity: int) -> int:
    return mix64(key) % capacity


class ProbeTable:
    """
    Open-addressing table with linear probing and no deletions.

    Attributes:
        capacity: Number of slots n
        slots: Per slot either None or the stored (key, hash_value)
        occupied: Number of stored keys
        probe_log: Probe count of every insertion, in insertion order
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidInputError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self.slots: List[Optional[Tuple[int, int]]] = [None] * capacity
        self.occupied = 0
        self.probe_log: List[int] = []
        self._keys: Dict[int, int] = {}

    @property
    def load(self) -> float:
        return self.occupied / self.capacity

    def _check_hash(self, hash_value: int) -> None:
        if not 0 <= hash_value < self.capacity:
            raise InvalidInputError(f"hash value {hash_value} outside [0, {self.capacity})")

    def insert(self, key: int, hash_value: int) -> int:
        """
        Store key in the first empty slot scanning right from hash_value.

        Args:
            key: Key to insert
            hash_value: Starting slot index

        Returns:
            Number of slots inspected, including the one finally used

        Raises:
            InvalidInputError: If the table is full or the key is present
        """
        self._check_hash(hash_value)
        if self.occupied == self.capacity:
            raise InvalidInputError(f"Table of capacity {self.capacity} is full")
        if key in self._keys:
            raise InvalidInputError(f"Duplicate key {key}")

        index = hash_value
        probes = 1
        while self.slots[index] is not None:
            index = (index + 1) % self.capacity
            probes += 1
        self.slots[index] = (key, hash_value)
        self._keys[key] = index
        self.occupied += 1
        self.probe_log.append(probes)
        return probes

    def lookup(self, key: int, hash_value: int) -> Tuple[bool, int]:
        """
        Scan right from hash_value until the key or an empty slot turns up.

        Returns:
            Tuple of (found, number of slots inspected)
        """
        self._check_hash(hash_value)
        index = hash_value
        for probes in range(1, self.capacity + 1):
            slot = self.slots[index]
            if slot is None:
                return False, probes
            if slot[0] == key:
                return True, probes
            index = (index + 1) % self.capacity
        return False, self.capacity

    def occupancy(self) -> np.ndarray:
        return np.fromiter((slot is not None for slot in self.slots), dtype=bool, count=self.capacity)

    def mean_insert_probes(self) -> float:
        """Mean probes over all insertions made so far."""
        return float(np.mean(self.probe_log)) if self.probe_log else 0.0

    def expected_insert_probes(self) -> float:
        """
        Exact mean probe count of the next insertion, averaged over all
        capacity hash values.

        A hash landing at offset j of an occupied run of length L costs
        L - j + 1 probes; a hash landing on an empty slot costs 1.
        """
        if self.occupied == self.capacity:
            raise InvalidInputError("A full table has no insertion cost")
        occupied = self.occupancy()
        # Rotate so the array starts right after an empty slot; no run wraps then
        start = (int(np.flatnonzero(~occupied)[-1]) + 1) % self.capacity
        rotated = np.roll(occupied, -start).astype(np.int8)
        edges = np.diff(np.concatenate(([0], rotated, [0])))
        run_lengths = np.flatnonzero(edges == -1) - np.flatnonzero(edges == 1)
        run_cost = int(np.sum(run_lengths * (run_lengths + 1) // 2 + run_lengths))
        empty = self.capacity - self.occupied
        return (run_cost + empty) / self.capacity


def uniform_probe_count(table: ProbeTable, rng: Rng) -> int:
    """
    Probes until an empty slot when every probe is an independent uniform slot.

    This is the idealized search whose cost is geometric with success
    probability 1 - load.
    """
    if table.occupied == table.capacity:
        raise InvalidInputError("Uniform probing never succeeds on a full table")
    probes = 1
    while table.slots[rng.integers(0, table.capacity)] is not None:
        probes += 1
    return probes


def geometric_reference(alpha: float) -> float:
    """Expected probes 1/(1-alpha) of independent uniform probing at load alpha."""
    if not 0 <= alpha < 1:
        raise InvalidInputError(f"alpha must lie in [0, 1), got {alpha}")
    return 1.0 / (1.0 - alpha)


def fill_targets(capacity: int, alphas: Sequence[float]) -> List[int]:
    """Keys to insert for each load; a load that rounds to a full table is rejected."""
    targets = []
    for alpha in alphas:
        if not 0 <= alpha < 1:
            raise InvalidInputError(f"alpha must lie in [0, 1), got {alpha}")
        target = int(round(alpha * capacity))
        if target >= capacity:
            raise InvalidInputError(
                f"alpha={alpha} fills all {capacity} slots; use a larger capacity or a smaller alpha")
        targets.append(target)
    return targets


def probing_trial(capacity: int, alphas: Sequence[float], rng: Rng) -> List[Dict[str, float]]:
    """
    Fill one table with uniformly hashed keys, measuring at each load in alphas.

    Returns:
        One measurement dict per alpha, in the order given
    """
    order = sorted(range(len(alphas)), key=lambda i: alphas[i])
    targets = fill_targets(capacity, alphas)
    table = ProbeTable(capacity)
    hashes = rng.integers(0, capacity, size=max(targets) if targets else 0)
    measurements: List[Optional[Dict[str, float]]] = [None] * len(alphas)
    key = 0
    for i in order:
        while table.occupied < targets[i]:
            table.insert(key, int(hashes[key]))
            key += 1
        uniform = [uniform_probe_count(table, rng) for _ in range(UNIFORM_PROBE_SAMPLES)]
        measurements[i] = {
            'insert_probes': table.expected_insert_probes(),
            'fill_probes': table.mean_insert_probes(),
            'uniform_probes': float(np.mean(uniform)),
        }
    return measurements


def probing_experiment(capacity: int, alphas: Sequence[float], trials: int, seed: int, workers: int = 0) -> List[ExperimentRecord]:
    """
    Insertion cost at each load, against the geometric baseline.

    Args:
        capacity: Table size
        alphas: Loads to measure at, each in [0, 1)
        trials: Independent tables
        seed: Master seed
        workers: Thread count for trial fan-out

    Returns:
        One record per alpha
    """
    fill_targets(capacity, alphas)
    logger.info(f"Probing experiment: capacity {capacity}, alphas {list(alphas)}, {trials} trials")
    results = run_trials(lambda index, rng: probing_trial(capacity, alphas, rng), seed, trials, workers)
    records = []
    for i, alpha in enumerate(alphas):
        per_trial = [trial[i] for trial in results]
        reference = geometric_reference(alpha)
        insert_mean, insert_stderr = mean_and_stderr([m['insert_probes'] for m in per_trial])
        records.append(ExperimentRecord(
            experiment='probing',
            params={'capacity': capacity, 'alpha': alpha},
            seed=seed,
            stats={
                'mean_insert_probes': insert_mean,
                'geometric_reference': reference,
                'insert_probes_stderr': insert_stderr,
                'trials_above_reference': float(sum(1 for m in per_trial if m['insert_probes'] >= reference)),
                'mean_fill_probes': float(np.mean([m['fill_probes'] for m in per_trial])),
                'mean_uniform_probes': float(np.mean([m['uniform_probes'] for m in per_trial])),
            },
        ))
    return records


def probing_violations(records: Sequence[ExperimentRecord]) -> List[str]:
    return [
        f"alpha={r.params['alpha']}: mean insertion probes {r.stats['mean_insert_probes']} < 1"
        for r in records if r.stats['mean_insert_probes'] < 1.0
    ]


def scaling_ratio(records: Sequence[ExperimentRecord], low: float = 0.5, high: float = 0.75) -> Optional[float]:
    """Ratio of mean insertion probes at load high to load low, if both were measured."""
    by_alpha = {r.params['alpha']: r.stats['mean_insert_probes'] for r in records}
    if low not in by_alpha or high not in by_alpha:
        return None
    return by_alpha[high] / by_alpha[low]


if __name__ == '__main__':
    for record in probing_experiment(1 << 12, [0.5, 0.75, 0.9], 5, 0):
        print(record.params['alpha'], record.stats['mean_insert_probes'], record.stats['geometric_reference'])
