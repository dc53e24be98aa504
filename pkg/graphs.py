"""
Random graph models (Erdos-Renyi, planted bisection, planted clique) and
the simple recovery algorithms that work on them.

Graphs are stored as a dense symmetric boolean adjacency matrix, filled
one row at a time from the caller's Rng.
"""
import math
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from common import ExperimentRecord, Rng, mean_and_stderr, run_trials
from utils import InvalidInputError, setup_logging

logger = setup_logging(__name__)

Bisection = Tuple[FrozenSet[int], FrozenSet[int]]

SUB_EXPERIMENTS = ('er-bisection', 'planted-clique', 'planted-bisection', 'greedy-clique')
CUT_SAMPLES = 10_000
CLIQUE_CONSTANT = 3.0


@dataclass(frozen=True)
class PlantedClique:
    members: FrozenSet[int]


@dataclass(frozen=True)
class PlantedBisection:
    s: FrozenSet[int]
    t: FrozenSet[int]


Planted = Union[PlantedClique, PlantedBisection]


class Graph:
    """
    Undirected simple graph on vertices 0..n-1.

    Attributes:
        n: Vertex count
        adjacency: Symmetric boolean (n, n) matrix with a false diagonal
        planted: Ground truth the generator embedded, if any
    """

    def __init__(self, adjacency: np.ndarray, planted: Optional[Planted] = None):
        adjacency = np.asarray(adjacency, dtype=bool)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise InvalidInputError(f"Adjacency must be square, got shape {adjacency.shape}")
        if adjacency.diagonal().any():
            raise InvalidInputError("Graph has self-loops")
        if not np.array_equal(adjacency, adjacency.T):
            raise InvalidInputError("Adjacency is not symmetric")
        self.adjacency = adjacency
        self.n = adjacency.shape[0]
        self.planted = planted
        self._check_planted()

    def _check_planted(self) -> None:
        if isinstance(self.planted, PlantedClique):
            q = sorted(self.planted.members)
            if not is_clique(self, q):
                raise InvalidInputError("Planted clique is not complete")
        elif isinstance(self.planted, PlantedBisection):
            _check_bisection(self.n, (self.planted.s, self.planted.t))

    def edge_count(self) -> int:
        return int(np.count_nonzero(self.adjacency)) // 2

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1)

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.adjacency[u, v])

    def neighbors(self, v: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[v])

    def relabel(self, perm: Sequence[int]) -> 'Graph':
        """Copy in which vertex v is renamed perm[v]."""
        perm = np.asarray(perm)
        if sorted(perm.tolist()) != list(range(self.n)):
            raise InvalidInputError("Relabeling must be a permutation of the vertices")
        inverse = np.argsort(perm)
        planted = self.planted
        rename = lambda vs: frozenset(int(perm[v]) for v in vs)
        if isinstance(planted, PlantedClique):
            planted = PlantedClique(rename(planted.members))
        elif isinstance(planted, PlantedBisection):
            planted = PlantedBisection(rename(planted.s), rename(planted.t))
        return Graph(self.adjacency[np.ix_(inverse, inverse)], planted)


def _sample_upper(n: int, rng: Rng, row_probability) -> np.ndarray:
    """Symmetric adjacency with pair (i, j), i < j, present w.p. row_probability(i)[j - i - 1]."""
    adjacency = np.zeros((n, n), dtype=bool)
    for i in range(n - 1):
        adjacency[i, i + 1:] = rng.random(n - i - 1) < row_probability(i)
    return adjacency | adjacency.T


def _check_probability(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise InvalidInputError(f"{name} must lie in [0, 1], got {value}")


def gen_er(n: int, p: float, rng: Rng) -> Graph:
    """G(n, p): every pair an edge independently with probability p."""
    _check_probability('p', p)
    return Graph(_sample_upper(n, rng, lambda i: p))


def gen_planted_bisection(n: int, p: float, q: float, rng: Rng) -> Graph:
    """
    Planted bisection: a uniformly random balanced split (S, T), with pairs
    inside a side present w.p. p and pairs across w.p. q.

    Raises:
        InvalidInputError: If n is odd or not 0 <= q <= p <= 1
    """
    if n % 2:
        raise InvalidInputError(f"Planted bisection needs an even n, got {n}")
    _check_probability('p', p)
    _check_probability('q', q)
    if q > p:
        raise InvalidInputError(f"Need q <= p, got p={p}, q={q}")
    perm = rng.permutation(n)
    in_s = np.zeros(n, dtype=bool)
    in_s[perm[:n // 2]] = True
    adjacency = _sample_upper(n, rng, lambda i: np.where(in_s[i + 1:] == in_s[i], p, q))
    s = frozenset(np.flatnonzero(in_s).tolist())
    t = frozenset(np.flatnonzero(~in_s).tolist())
    return Graph(adjacency, PlantedBisection(s, t))


def gen_planted_clique(n: int, k: int, rng: Rng) -> Graph:
    """G(n, 1/2) with a uniformly random k-subset made complete."""
    if not 1 <= k <= n:
        raise InvalidInputError(f"Need 1 <= k <= n, got k={k}, n={n}")
    adjacency = _sample_upper(n, rng, lambda i: 0.5)
    members = rng.choice_subset(n, k)
    adjacency[np.ix_(members, members)] = True
    np.fill_diagonal(adjacency, False)
    return Graph(adjacency, PlantedClique(frozenset(members)))


def is_clique(g: Graph, vertices: Iterable[int]) -> bool:
    vs = list(vertices)
    block = g.adjacency[np.ix_(vs, vs)]
    return bool(block.sum() == len(vs) * (len(vs) - 1))


def top_k_degrees(g: Graph, k: int) -> FrozenSet[int]:
    """The k vertices of largest degree, ties broken by lower index."""
    if not 1 <= k <= g.n:
        raise InvalidInputError(f"Need 1 <= k <= n, got k={k}, n={g.n}")
    order = np.lexsort((np.arange(g.n), -g.degrees()))
    return frozenset(order[:k].tolist())


def greedy_clique(g: Graph, rng: Rng) -> FrozenSet[int]:
    """
    Scan vertices in random order, keeping each one adjacent to all kept so far.

    candidates[v] stays true exactly while v is adjacent to every chosen vertex.
    """
    chosen = []
    candidates = np.ones(g.n, dtype=bool)
    for v in rng.permutation(g.n):
        if candidates[v]:
            chosen.append(v)
            candidates &= g.adjacency[v]
    return frozenset(chosen)


def common_neighbor_bisection(g: Graph) -> Bisection:
    """
    Split the vertices by how many neighbors they share with vertex 0.

    A is the n/2 vertices other than 0 with the fewest common neighbors
    with vertex 0 (ties by index); B is the rest, vertex 0 included.

    Raises:
        InvalidInputError: If n is odd or below 4
    """
    if g.n % 2 or g.n < 4:
        raise InvalidInputError(f"Common-neighbor bisection needs an even n >= 4, got {g.n}")
    common = g.adjacency[:, g.adjacency[0]].sum(axis=1, dtype=np.int64)
    common[0] = g.n + 1
    order = np.lexsort((np.arange(g.n), common))
    a = frozenset(order[:g.n // 2].tolist())
    return a, frozenset(range(g.n)) - a


def bisection_recovered(g: Graph, bisection: Bisection) -> bool:
    """Whether a bisection equals the planted one, up to swapping sides."""
    if not isinstance(g.planted, PlantedBisection):
        raise InvalidInputError("Graph has no planted bisection")
    return bisection[0] in (g.planted.s, g.planted.t)


def bisection_accuracy(g: Graph, bisection: Bisection) -> float:
    """Fraction of vertices on the correct side, under the better side matching."""
    if not isinstance(g.planted, PlantedBisection):
        raise InvalidInputError("Graph has no planted bisection")
    agree = len(bisection[0] & g.planted.s) + len(bisection[1] & g.planted.t)
    return max(agree, g.n - agree) / g.n


def _check_bisection(n: int, bisection: Bisection) -> None:
    a, b = bisection
    if len(a) != len(b) or len(a) + len(b) != n or a & b or (a | b) != frozenset(range(n)):
        raise InvalidInputError(f"({len(a)}, {len(b)}) is not a balanced bisection of {n} vertices")


def bisection_cut(g: Graph, bisection: Bisection) -> int:
    """Number of edges with one endpoint on each side."""
    _check_bisection(g.n, bisection)
    a, b = sorted(bisection[0]), sorted(bisection[1])
    return int(np.count_nonzero(g.adjacency[np.ix_(a, b)]))


def random_bisection(n: int, rng: Rng) -> Bisection:
    if n % 2:
        raise InvalidInputError(f"A bisection needs an even n, got {n}")
    perm = rng.permutation(n)
    return frozenset(perm[:n // 2]), frozenset(perm[n // 2:])


def sampled_cut_range(g: Graph, samples: int, rng: Rng) -> Tuple[int, int]:
    """
    Smallest and largest cut over uniformly random bisections.

    With x the +-1 side indicator, cut = (m - x'Ax / 2) / 2, so all samples
    are evaluated with one matrix product.
    """
    if g.n % 2:
        raise InvalidInputError(f"A bisection needs an even n, got {g.n}")
    sides = np.empty((samples, g.n))
    for row in range(samples):
        sides[row, rng.permutation(g.n)] = np.repeat((1.0, -1.0), g.n // 2)
    adjacency = g.adjacency.astype(float)
    quadratic = np.einsum('si,si->s', sides @ adjacency, sides)
    cuts = np.rint((g.edge_count() - quadratic / 2) / 2).astype(int)
    return int(cuts.min()), int(cuts.max())


def expected_k_cliques(n: int, k: int) -> float:
    """C(n, k) 2^-C(k, 2), evaluated in log space."""
    if not 0 <= k <= n:
        raise InvalidInputError(f"Need 0 <= k <= n, got k={k}, n={n}")
    log_value = (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)
                 - k * (k - 1) / 2 * math.log(2))
    return math.exp(log_value)


def clique_number_crossing(n: int) -> int:
    """Smallest k whose expected number of k-cliques in G(n, 1/2) is below 1."""
    for k in range(n + 1):
        if expected_k_cliques(n, k) < 1.0:
            return k
    return n + 1


def write_edge_list(g: Graph, sink: TextIO) -> None:
    """Header 'n m', then one 'u v' line per edge with u < v."""
    us, vs = np.nonzero(np.triu(g.adjacency, 1))
    sink.write(f"{g.n} {len(us)}\n")
    for u, v in zip(us.tolist(), vs.tolist()):
        sink.write(f"{u} {v}\n")


def read_edge_list(text: str) -> Graph:
    lines = [line.split() for line in text.splitlines() if line.strip()]
    if not lines or len(lines[0]) != 2:
        raise InvalidInputError("Edge list must start with an 'n m' header")
    n, m = (int(x) for x in lines[0])
    if len(lines) - 1 != m:
        raise InvalidInputError(f"Header announces {m} edges, found {len(lines) - 1}")
    adjacency = np.zeros((n, n), dtype=bool)
    for fields in lines[1:]:
        u, v = (int(x) for x in fields)
        if u == v or not (0 <= u < n and 0 <= v < n):
            raise InvalidInputError(f"Invalid edge {u} {v}")
        adjacency[u, v] = adjacency[v, u] = True
    return Graph(adjacency)


def default_clique_size(n: int) -> int:
    """Clique size 3 sqrt(n ln n), clamped to [1, n]."""
    return min(n, max(1, math.ceil(CLIQUE_CONSTANT * math.sqrt(n * math.log(n)))))


def _record(name: str, params: dict, seed: int, stats: dict) -> ExperimentRecord:
    return ExperimentRecord(experiment=f"graphs-{name}", params=params, seed=seed, stats=stats)


def er_bisection_experiment(n: int, p: float, trials: int, seed: int, samples: int = CUT_SAMPLES,
                            workers: int = 0) -> List[ExperimentRecord]:
    """Sampled min and max bisection cut of G(n, p) against the mean p n^2 / 4."""
    def trial(index: int, rng: Rng):
        g = gen_er(n, p, rng)
        return sampled_cut_range(g, samples, rng.spawn(1))

    results = run_trials(trial, seed, trials, workers)
    expected = p * n * n / 4
    within = [lo >= 0.95 * expected and hi <= 1.05 * expected for lo, hi in results]
    return [_record('er-bisection', {'n': n, 'p': p, 'samples': samples}, seed, {
        'success_rate': sum(within) / trials,
        'mean_min_cut': float(np.mean([lo for lo, _ in results])),
        'mean_max_cut': float(np.mean([hi for _, hi in results])),
        'expected_cut': expected,
    })]


def planted_bisection_experiment(n: int, p: float, q: float, trials: int, seed: int,
                                 workers: int = 0) -> List[ExperimentRecord]:
    def trial(index: int, rng: Rng):
        g = gen_planted_bisection(n, p, q, rng)
        found = common_neighbor_bisection(g)
        return bisection_recovered(g, found), bisection_accuracy(g, found), bisection_cut(g, found)

    results = run_trials(trial, seed, trials, workers)
    accuracy, accuracy_stderr = mean_and_stderr([acc for _, acc, _ in results])
    return [_record('planted-bisection', {'n': n, 'p': p, 'q': q}, seed, {
        'success_rate': sum(ok for ok, _, _ in results) / trials,
        'mean_accuracy': accuracy,
        'accuracy_stderr': accuracy_stderr,
        'mean_cut': float(np.mean([cut for _, _, cut in results])),
    })]


def planted_clique_experiment(n: int, k: int, trials: int, seed: int, workers: int = 0) -> List[ExperimentRecord]:
    def trial(index: int, rng: Rng):
        g = gen_planted_clique(n, k, rng)
        found = top_k_degrees(g, k)
        return found == g.planted.members, len(found & g.planted.members) / k

    results = run_trials(trial, seed, trials, workers)
    return [_record('planted-clique', {'n': n, 'k': k}, seed, {
        'success_rate': sum(ok for ok, _ in results) / trials,
        'mean_overlap': float(np.mean([overlap for _, overlap in results])),
    })]


def greedy_clique_experiment(n: int, trials: int, seed: int, workers: int = 0) -> List[ExperimentRecord]:
    def trial(index: int, rng: Rng):
        g = gen_er(n, 0.5, rng)
        found = greedy_clique(g, rng.spawn(1))
        return len(found), is_clique(g, found)

    results = run_trials(trial, seed, trials, workers)
    target = math.log2(n)
    sizes = [size for size, _ in results]
    mean, stderr = mean_and_stderr(sizes)
    return [_record('greedy-clique', {'n': n}, seed, {
        'success_rate': sum(1 for s in sizes if abs(s - target) <= 3) / trials,
        'mean_clique_size': mean,
        'clique_size_stderr': stderr,
        'log2_n': target,
        'non_cliques': float(sum(1 for _, ok in results if not ok)),
    })]


def graphs_experiment(name: str, n: int, trials: int, seed: int, p: float = 0.5, q: float = 0.25,
                      k: Optional[int] = None, workers: int = 0) -> List[ExperimentRecord]:
    """
    Dispatch one graph sub-experiment.

    Args:
        name: One of er-bisection, planted-clique, planted-bisection, greedy-clique
        n: Vertex count
        trials: Number of sampled graphs
        seed: Master seed
        p: Edge probability (inside sides for planted bisection)
        q: Cross-side edge probability for planted bisection
        k: Planted clique size, default ceil(3 sqrt(n ln n))
        workers: Thread count for trial fan-out
    """
    logger.info(f"Graph experiment {name}: n={n}, {trials} trials")
    if name == 'er-bisection':
        return er_bisection_experiment(n, p, trials, seed, workers=workers)
    if name == 'planted-bisection':
        return planted_bisection_experiment(n, p, q, trials, seed, workers)
    if name == 'planted-clique':
        return planted_clique_experiment(n, k if k is not None else default_clique_size(n),
                                         trials, seed, workers)
    if name == 'greedy-clique':
        return greedy_clique_experiment(n, trials, seed, workers)
    raise InvalidInputError(f"Unknown graph experiment {name!r}; choose from {SUB_EXPERIMENTS}")


def graphs_violations(records: Sequence[ExperimentRecord]) -> List[str]:
    """Greedy outputs that are not cliques."""
    return [f"n={r.params['n']}: {int(r.stats['non_cliques'])} greedy outputs are not cliques"
            for r in records if r.stats.get('non_cliques', 0) > 0]


if __name__ == '__main__':
    print(f"Expected-clique crossing at n=1024: k={clique_number_crossing(1024)}")
