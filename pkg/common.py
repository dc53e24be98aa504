"""
Shared plumbing for every experiment: seeded randomness, exact discrete
distribution algebra, and experiment record output.
"""
import io
import csv
import json
import math
import concurrent.futures
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Callable, Dict, IO, Iterable, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np

from utils import InvalidInputError, setup_logging

logger = setup_logging(__name__)

PROB_TOLERANCE = 1e-12
SEED_LIMIT = 2 ** 64

T = TypeVar('T')


class Rng:
    """
    Deterministic random stream backed by the counter-based Philox generator.

    A stream is identified by a master seed and a path of nonnegative
    integers (usually just the trial index). The whole key is fed to a
    SeedSequence, so distinct keys give independent sub-streams.
    """

    def __init__(self, seed: int, *path: int):
        if not 0 <= int(seed) < SEED_LIMIT:
            raise InvalidInputError(f"Seed must be a 64-bit unsigned integer, got {seed}")
        if any(int(p) < 0 for p in path):
            raise InvalidInputError(f"Stream path entries must be >= 0, got {path}")
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        entropy = [self.seed, *self.path]
        self._generator = np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))

    @classmethod
    def for_trial(cls, master_seed: int, trial_index: int) -> 'Rng':
        """Sub-stream for one trial of an experiment."""
        return cls(master_seed, trial_index)

    def spawn(self, index: int) -> 'Rng':
        """Independent child stream keyed by this stream's key plus index."""
        return Rng(self.seed, *self.path, index)

    def uniform(self) -> float:
        """Uniform real in [0, 1) built from a 53-bit mantissa."""
        return float(self._generator.random())

    def random(self, size: Union[int, Tuple[int, ...]]) -> np.ndarray:
        """Array of uniform reals in [0, 1)."""
        return self._generator.random(size)

    def integers(self, low: int, high: int, size: Optional[int] = None):
        """Uniform integers in [low, high)."""
        if size is None:
            return int(self._generator.integers(low, high))
        return self._generator.integers(low, high, size=size)

    def permutation(self, n: int) -> List[int]:
        return [int(v) for v in self._generator.permutation(n)]

    def choice_subset(self, n: int, k: int) -> List[int]:
        """Uniformly random k-subset of range(n), ascending."""
        if not 0 <= k <= n:
            raise InvalidInputError(f"Cannot choose {k} of {n} items")
        return sorted(int(v) for v in self._generator.choice(n, size=k, replace=False))


class AcceptMode(str, Enum):
    """How a stage threshold treats a prize equal to it."""
    AT_LEAST = 'at-least'
    STRICTLY_GREATER = 'strictly-greater'

    def passes(self, value: float, threshold: float) -> bool:
        if self is AcceptMode.AT_LEAST:
            return value >= threshold
        return value > threshold


@dataclass(frozen=True)
class DiscreteDistribution:
    """
    Finite distribution over ascending support values.

    Attributes:
        values: Strictly ascending support values
        probs: Probability of each support value, each in (0, 1]
    """
    values: Tuple[float, ...]
    probs: Tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise InvalidInputError("Distribution support must be nonempty")
        if len(self.values) != len(self.probs):
            raise InvalidInputError("Support values and probabilities differ in length")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise InvalidInputError("Support values must be strictly ascending")
        if any(not 0.0 < p <= 1.0 for p in self.probs):
            raise InvalidInputError("Probabilities must lie in (0, 1]")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > PROB_TOLERANCE:
            raise InvalidInputError(f"Probabilities sum to {total!r}, not 1")

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[float, float]]) -> 'DiscreteDistribution':
        """
        Build a distribution from (value, prob) pairs in any order.

        Equal values are merged and zero-probability entries dropped.
        """
        merged: Dict[float, float] = {}
        for value, prob in pairs:
            if prob < 0:
                raise InvalidInputError(f"Negative probability {prob} for value {value}")
            merged[float(value)] = merged.get(float(value), 0.0) + float(prob)
        support = sorted((v, min(p, 1.0)) for v, p in merged.items() if p > 0)
        return cls(tuple(v for v, _ in support), tuple(p for _, p in support))

    @classmethod
    def point_mass(cls, value: float) -> 'DiscreteDistribution':
        return cls((float(value),), (1.0,))

    @property
    def support(self) -> List[Tuple[float, float]]:
        return list(zip(self.values, self.probs))

    @cached_property
    def cumulative(self) -> Tuple[float, ...]:
        return tuple(np.cumsum(self.probs).tolist())

    def cdf(self, v: float) -> float:
        """P(X <= v)."""
        return math.fsum(self.probs[:bisect_right(self.values, v)])

    def below(self, t: float) -> float:
        """P(X < t)."""
        return math.fsum(self.probs[:bisect_left(self.values, t)])

    def fail_probability(self, t: float, mode: AcceptMode) -> float:
        """Probability that a draw does not pass threshold t under mode."""
        return self.below(t) if mode is AcceptMode.AT_LEAST else self.cdf(t)

    def partial_expectation(self, t: float, mode: AcceptMode) -> float:
        """E[X * 1{X passes t}]."""
        return math.fsum(v * p for v, p in self.support if mode.passes(v, t))

    def excess(self, t: float) -> float:
        """E[(X - t)^+]."""
        return math.fsum((v - t) * p for v, p in self.support if v > t)

    def mean(self) -> float:
        return math.fsum(v * p for v, p in self.support)

    @property
    def nonnegative(self) -> bool:
        return self.values[0] >= 0


def random_distribution(rng: Rng, support_size: int, scale: float = 10.0) -> DiscreteDistribution:
    """
    Draw a random prize distribution for experiments.

    Args:
        rng: Random stream
        support_size: Maximum number of support points
        scale: Support values are integers in [0, scale]

    Returns:
        Distribution with nonnegative integer-valued support
    """
    if support_size < 1:
        raise InvalidInputError(f"support_size must be >= 1, got {support_size}")
    values = rng.integers(0, int(scale) + 1, size=support_size)
    weights = rng.random(support_size) + 1e-3
    weights = weights / weights.sum()
    return DiscreteDistribution.from_pairs(zip(values.tolist(), weights.tolist()))


def sample(dist: DiscreteDistribution, rng: Rng) -> float:
    """
    Draw one value from a discrete distribution.

    Args:
        dist: Distribution to sample
        rng: Random stream

    Returns:
        One support value
    """
    u = rng.uniform()
    index = bisect_right(dist.cumulative, u)
    return dist.values[min(index, len(dist.values) - 1)]


def sample_array(dist: DiscreteDistribution, rng: Rng, size: int) -> np.ndarray:
    """Draw size independent values from a discrete distribution."""
    indices = np.searchsorted(np.asarray(dist.cumulative), rng.random(size), side='right')
    return np.asarray(dist.values)[np.minimum(indices, len(dist.values) - 1)]


def expected_max(dists: Sequence[DiscreteDistribution]) -> float:
    """
    Exact expected maximum of independent draws, one from each distribution.

    Uses P(max <= v) = prod_i F_i(v) over the sorted union of supports.
    """
    if not dists:
        raise InvalidInputError("expected_max needs at least one distribution")
    union = sorted({v for dist in dists for v in dist.values})
    total = []
    previous = 0.0
    for v in union:
        at_most = math.prod(dist.cdf(v) for dist in dists)
        total.append(v * (at_most - previous))
        previous = at_most
    return math.fsum(total)


@dataclass
class ExperimentRecord:
    """
    One row of experiment output.

    Columns are laid out as experiment, parameters, seed, statistics; the
    position of the seed column is what lets a reader split a flat row
    back into parameters and statistics.
    """
    experiment: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    stats: Dict[str, float] = field(default_factory=dict)

    def columns(self) -> List[str]:
        return ['experiment', *self.params, 'seed', *self.stats]

    def to_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {'experiment': self.experiment}
        row.update(self.params)
        row['seed'] = self.seed
        row.update(self.stats)
        return row

    @classmethod
    def from_row(cls, row: Dict[str, Any]) -> 'ExperimentRecord':
        keys = list(row)
        if not keys or keys[0] != 'experiment' or 'seed' not in row:
            raise InvalidInputError(f"Row is missing experiment/seed columns: {keys}")
        split = keys.index('seed')
        return cls(
            experiment=row['experiment'],
            params={k: row[k] for k in keys[1:split]},
            seed=int(row['seed']),
            stats={k: row[k] for k in keys[split + 1:]},
        )


def format_number(value: Any) -> str:
    """Render a value for output; floats use 17 significant digits, None is null."""
    if value is None:
        return 'null'
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'NaN'
        if math.isinf(value):
            return 'Infinity' if value > 0 else '-Infinity'
        text = format(value, '.17g')
        if all(c.isdigit() or c == '-' for c in text):
            text += '.0'
        return text
    return str(value)


def _parse_scalar(text: str) -> Any:
    if text == 'null':
        return None
    if text in ('true', 'false'):
        return text == 'true'
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _json_scalar(value: Any) -> str:
    """JSON has no NaN or infinity: NaN becomes null, infinities become strings."""
    if isinstance(value, str):
        return json.dumps(value)
    if value is None:
        return 'null'
    if isinstance(value, (float, np.floating)) and not math.isfinite(value):
        return 'null' if math.isnan(value) else json.dumps(format_number(value))
    return format_number(value)


def _json_stat(value: Any) -> Any:
    if value is None:
        return math.nan
    if value in ('Infinity', '-Infinity'):
        return float(value)
    return value


def _check_homogeneous(records: Sequence[ExperimentRecord]) -> List[str]:
    columns = records[0].columns()
    for record in records[1:]:
        if record.experiment != records[0].experiment:
            raise InvalidInputError(
                f"Records mix experiments {records[0].experiment!r} and {record.experiment!r}")
        if record.columns() != columns:
            raise InvalidInputError(f"Heterogeneous record columns: {columns} vs {record.columns()}")
    return columns


def write_records(
    records: Sequence[ExperimentRecord],
    format: str,
    sink: IO[str],
    config: Optional[Dict[str, Any]] = None,
) -> None:
    """
    Write experiment records as CSV or JSON.

    Args:
        records: Records sharing an experiment name and column set
        format: 'csv' or 'json'
        sink: Text stream to write to
        config: Optional run configuration, embedded as '#' comment lines
            (CSV) or a 'config' field (JSON)

    Raises:
        InvalidInputError: On heterogeneous columns or an unknown format
    """
    records = list(records)
    columns = _check_homogeneous(records) if records else ['experiment', 'seed']

    if format == 'csv':
        if config:
            for key, value in config.items():
                sink.write(f"# {key}={format_number(value)}\n")
        writer = csv.writer(sink, lineterminator='\n')
        writer.writerow(columns)
        for record in records:
            row = record.to_row()
            writer.writerow([format_number(row[c]) for c in columns])
    elif format == 'json':
        objects = []
        for record in records:
            row = record.to_row()
            body = ', '.join(f"{json.dumps(c)}: {_json_scalar(row[c])}" for c in columns)
            objects.append('{' + body + '}')
        array = '[' + ',\n '.join(objects) + ']'
        if config:
            config_text = '{' + ', '.join(
                f"{json.dumps(k)}: {_json_scalar(v)}" for k, v in config.items()) + '}'
            sink.write('{"config": ' + config_text + ',\n "records": ' + array + '}\n')
        else:
            sink.write(array + '\n')
    else:
        raise InvalidInputError(f"Unknown record format: {format}")


def read_records(text: str, format: str) -> List[ExperimentRecord]:
    """
    Parse records written by write_records.

    Args:
        text: CSV or JSON document
        format: 'csv' or 'json'

    Returns:
        Parsed records in file order
    """
    if format == 'csv':
        lines = [line for line in text.splitlines() if not line.startswith('#')]
        reader = csv.reader(io.StringIO('\n'.join(lines)))
        rows = list(reader)
        if not rows:
            return []
        header = rows[0]
        return [ExperimentRecord.from_row({c: _parse_scalar(v) for c, v in zip(header, row)})
                for row in rows[1:]]
    if format == 'json':
        document = json.loads(text)
        if isinstance(document, dict):
            document = document.get('records', [])
        records = [ExperimentRecord.from_row(row) for row in document]
        for record in records:
            record.stats = {k: _json_stat(v) for k, v in record.stats.items()}
        return records
    raise InvalidInputError(f"Unknown record format: {format}")


def mean_and_stderr(values: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and standard error of the mean."""
    array = np.asarray(values, dtype=float)
    if array.size == 0:
        raise InvalidInputError("Cannot average an empty sample")
    if array.size == 1:
        return float(array[0]), 0.0
    return float(array.mean()), float(array.std(ddof=1) / math.sqrt(array.size))


def run_trials(
    trial: Callable[[int, Rng], T],
    seed: int,
    trials: int,
    workers: int = 0,
) -> List[T]:
    """
    Run independent trials, each with its own sub-stream of the master seed.

    Args:
        trial: Function of (trial_index, rng) returning one result
        seed: Master seed
        trials: Number of trials
        workers: Thread count; 0 runs the trials serially

    Returns:
        Trial results ordered by trial index, whatever order they finished in
    """
    if trials < 1:
        raise InvalidInputError(f"trials must be >= 1, got {trials}")
    if workers <= 0:
        return [trial(index, Rng.for_trial(seed, index)) for index in range(trials)]

    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(trial, index, Rng.for_trial(seed, index)) for index in range(trials)]
        results = []
        for index, future in enumerate(futures):
            try:
                results.append(future.result())
            except Exception as e:
                logger.error(f"Trial {index} failed: {str(e)}")
                raise
        return results
