"""
Euclidean TSP in the unit square: Held-Karp for small instances and the
grid-dissection Stitch heuristic built on top of it.
"""
import concurrent.futures
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from common import ExperimentRecord, Rng, run_trials
from geometry import PointSet, uniform_points
from utils import InvalidInputError, setup_logging

logger = setup_logging(__name__)

HELD_KARP_LIMIT = 20
BRUTE_FORCE_LIMIT = 9
ORACLE_LIMIT = 14
BOUSTROPHEDON_CONSTANT = 4.0


@dataclass(frozen=True)
class Tour:
    """Closed tour: a permutation of point indices and its length."""
    order: Tuple[int, ...]
    length: float


def _coords(ps: PointSet) -> np.ndarray:
    return np.asarray(ps.points, dtype=float).reshape(len(ps), 2)


def tour_length(ps: PointSet, order: Sequence[int]) -> float:
    """
    Sum of Euclidean edge lengths along order, closing the cycle.

    Raises:
        InvalidInputError: If order is not a permutation of the point indices
    """
    order = list(order)
    if sorted(order) != list(range(len(ps))):
        raise InvalidInputError(f"Tour order is not a permutation of {len(ps)} points")
    if len(order) < 2:
        return 0.0
    pts = _coords(ps)[order]
    steps = pts - np.roll(pts, -1, axis=0)
    return math.fsum(np.hypot(steps[:, 0], steps[:, 1]))


def make_tour(ps: PointSet, order: Sequence[int]) -> Tour:
    return Tour(tuple(int(i) for i in order), tour_length(ps, order))


def distance_matrix(pts: np.ndarray) -> np.ndarray:
    diff = pts[:, None, :] - pts[None, :, :]
    return np.hypot(diff[..., 0], diff[..., 1])


@lru_cache(maxsize=None)
def _layer_tables(k: int) -> Tuple[Tuple[Tuple[np.ndarray, np.ndarray], ...], ...]:
    """
    Index tables for Held-Karp over k points besides the start.

    Returns:
        One entry per subset size 2..k; each holds, for every last point l,
        the masks of that size containing l and the same masks without l
    """
    masks = np.arange(1 << k, dtype=np.int64)
    counts = np.zeros(1 << k, dtype=np.int8)
    for bit in range(k):
        counts += ((masks >> bit) & 1).astype(np.int8)
    tables = []
    for size in range(2, k + 1):
        layer = masks[counts == size]
        per_last = []
        for last in range(k):
            with_last = layer[(layer >> last) & 1 == 1]
            per_last.append((with_last.astype(np.int32), (with_last ^ (1 << last)).astype(np.int32)))
        tables.append(tuple(per_last))
    return tuple(tables)


def _held_karp_order(dist: np.ndarray) -> List[int]:
    """
    Optimal tour order over all points of a distance matrix, starting at 0.

    dp[S, l] is the shortest path from point 0 through the set S of other
    points, ending at l. Layers of equal |S| are filled with numpy, each
    entry as min over j of dp[S - l, j] + d(j, l).
    """
    m = dist.shape[0]
    if m <= 3:
        return list(range(m))
    k = m - 1
    inner = dist[1:, 1:]
    bits = np.int64(1) << np.arange(k, dtype=np.int64)
    dp = np.full((1 << k, k), np.inf)
    dp[bits, np.arange(k)] = dist[0, 1:]

    for per_last in _layer_tables(k):
        for last, (masks, previous) in enumerate(per_last):
            rows = dp[previous]
            rows += inner[:, last]
            dp[masks, last] = rows.min(axis=1)

    full = (1 << k) - 1
    last = int(np.argmin(dp[full] + dist[1:, 0]))
    path = [last]
    mask = full
    while mask != (1 << last):
        previous = mask ^ (1 << last)
        last = int(np.argmin(dp[previous] + inner[:, last]))
        path.append(last)
        mask = previous
    return [0] + [l + 1 for l in reversed(path)]


def held_karp(ps: PointSet) -> Tour:
    """
    Optimal tour by dynamic programming over subsets.

    Args:
        ps: At most 20 points; fewer than two give a zero-length tour

    Returns:
        Optimal Tour starting at point 0

    Raises:
        InvalidInputError: For more than 20 points
    """
    n = len(ps)
    if n > HELD_KARP_LIMIT:
        raise InvalidInputError(f"Held-Karp supports at most {HELD_KARP_LIMIT} points, got {n}")
    if n < 2:
        return Tour(tuple(range(n)), 0.0)
    return make_tour(ps, _held_karp_order(distance_matrix(_coords(ps))))


def brute_force_tour(ps: PointSet) -> Tour:
    """Optimal tour by trying all (n-1)!/2 cyclic orders. At most 9 points."""
    n = len(ps)
    if n > BRUTE_FORCE_LIMIT:
        raise InvalidInputError(f"Brute-force tour supports at most {BRUTE_FORCE_LIMIT} points, got {n}")
    if n < 4:
        return make_tour(ps, range(n))
    best = None
    for rest in itertools.permutations(range(1, n)):
        if rest[0] > rest[-1]:
            continue
        length = tour_length(ps, (0, *rest))
        if best is None or length < best.length:
            best = Tour((0, *rest), length)
    return best


@dataclass(frozen=True)
class GridDissection:
    """
    g x g grid of square cells over the unit square.

    Attributes:
        g: Cells per side
        cells: Cell index row * g + col of every point, row counted from the bottom
    """
    g: int
    cells: Tuple[int, ...]

    def members(self) -> Dict[int, List[int]]:
        """Point indices per nonempty cell, ascending."""
        groups: Dict[int, List[int]] = {}
        for index, cell in enumerate(self.cells):
            groups.setdefault(cell, []).append(index)
        return groups

    def serpentine_cells(self) -> List[int]:
        """All cells, bottom row left to right, next row right to left, and so on."""
        order = []
        for row in range(self.g):
            cols = range(self.g) if row % 2 == 0 else range(self.g - 1, -1, -1)
            order.extend(row * self.g + col for col in cols)
        return order


def grid_dimension(n: int) -> int:
    if n < 3:
        raise InvalidInputError(f"Grid dissection needs n >= 3, got {n}")
    return math.ceil(math.sqrt(n / math.log(n)))


def build_dissection(ps: PointSet) -> GridDissection:
    g = grid_dimension(len(ps))
    pts = _coords(ps)
    cols = np.minimum(np.floor(pts[:, 0] * g).astype(int), g - 1)
    rows = np.minimum(np.floor(pts[:, 1] * g).astype(int), g - 1)
    return GridDissection(g, tuple(int(c) for c in rows * g + cols))


def max_cell_occupancy(dissection: GridDissection) -> int:
    return max(len(points) for points in dissection.members().values())


def occupancy_bound(n: int) -> float:
    return 6.0 * math.log2(n)


def boustrophedon_bound(n: int) -> float:
    """Length bound 4 sqrt(n / ln n) for the representative tour."""
    return BOUSTROPHEDON_CONSTANT * math.sqrt(n / math.log(n))


def representative_tour(ps: PointSet, dissection: GridDissection) -> Tour:
    """
    Closed tour through the lowest-indexed point of each nonempty cell, in
    serpentine cell order.
    """
    groups = dissection.members()
    reps = [groups[cell][0] for cell in dissection.serpentine_cells() if cell in groups]
    if len(reps) < 2:
        return Tour(tuple(reps), 0.0)
    pts = _coords(ps)[reps]
    steps = pts - np.roll(pts, -1, axis=0)
    return Tour(tuple(reps), math.fsum(np.hypot(steps[:, 0], steps[:, 1])))


def cell_subtour(pts: np.ndarray, members: Sequence[int], exact_limit: float) -> List[int]:
    """
    Tour of one cell's points, starting at its lowest index.

    Cells with at most exact_limit points are solved by Held-Karp; larger
    cells fall back to visiting points in (x, y) order.

    Args:
        pts: Coordinates of all points, shape (n, 2)
        members: Ascending point indices of the cell
        exact_limit: Largest cell size solved exactly
    """
    local = pts[list(members)]
    if len(members) <= exact_limit:
        return [members[i] for i in _held_karp_order(distance_matrix(local))]
    ordered = [members[i] for i in np.lexsort((local[:, 1], local[:, 0]))]
    start = ordered.index(members[0])
    return ordered[start:] + ordered[:start]


def _open_options(pts: np.ndarray, cycle: Sequence[int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Every way to open a cyclic subtour into a path: drop one edge, then walk
    the rest forward or backward.

    Option i < m drops the edge (c[i], c[i+1]) and walks forward from c[i+1];
    option m + i drops the same edge and walks backward from c[i].

    Returns:
        (entries, exits, path_lengths), one element per option
    """
    c = np.asarray(cycle)
    if len(c) == 1:
        return c, c, np.zeros(1)
    following = np.roll(c, -1)
    step = pts[c] - pts[following]
    edges = np.hypot(step[:, 0], step[:, 1])
    paths = edges.sum() - edges
    return np.concatenate((following, c)), np.concatenate((c, following)), np.concatenate((paths, paths))


def _open_path(cycle: Sequence[int], option: int) -> List[int]:
    m = len(cycle)
    if option < m:
        start = (option + 1) % m
        return list(cycle[start:]) + list(cycle[:start])
    return [cycle[(option - m - t) % m] for t in range(m)]


def _join_subtours(pts: np.ndarray, cycles: Sequence[Sequence[int]]) -> List[int]:
    """
    Shortest closed tour that traverses each cycle as an opened path, the
    paths taken in the given order.

    state[f, e] is the best length through the cells so far when the first
    cell uses option f and the current cell option e. Ties go to the lowest
    option.
    """
    if len(cycles) == 1:
        return list(cycles[0])
    options = [_open_options(pts, cycle) for cycle in cycles]
    first_entries, exits, lengths = options[0]
    state = np.full((len(lengths), len(lengths)), np.inf)
    np.fill_diagonal(state, lengths)
    choices = []
    for entries, next_exits, lengths in options[1:]:
        link = pts[exits][:, None, :] - pts[entries][None, :, :]
        total = state[:, :, None] + np.hypot(link[..., 0], link[..., 1])[None, :, :]
        choice = np.argmin(total, axis=1)
        state = np.take_along_axis(total, choice[:, None, :], axis=1)[:, 0, :] + lengths[None, :]
        choices.append(choice)
        exits = next_exits

    closing = pts[exits][None, :, :] - pts[first_entries][:, None, :]
    total = state + np.hypot(closing[..., 0], closing[..., 1])
    first, option = np.unravel_index(int(np.argmin(total)), total.shape)
    chosen = [int(option)]
    for choice in reversed(choices):
        chosen.append(int(choice[first, chosen[-1]]))
    chosen.reverse()

    order: List[int] = []
    for cycle, option in zip(cycles, chosen):
        order.extend(_open_path(cycle, option))
    return order


def stitch(ps: PointSet, workers: int = 0) -> Tour:
    """
    Grid-dissection tour.

    Solves every nonempty cell separately, then joins the cell subtours in
    the order the representative tour visits their cells. Each subtour is
    opened at whichever edge and walked in whichever direction gives the
    shortest joined tour, so the result is never longer than concatenating
    the subtours rotated to start at their representatives.

    Args:
        ps: At least three points
        workers: Thread count for solving cells; 0 solves them serially

    Returns:
        Tour over all points
    """
    n = len(ps)
    if n < 3:
        raise InvalidInputError(f"Stitch needs at least 3 points, got {n}")
    dissection = build_dissection(ps)
    groups = dissection.members()
    exact_limit = min(occupancy_bound(n), HELD_KARP_LIMIT)
    pts = _coords(ps)
    cells = [groups[cell] for cell in dissection.serpentine_cells() if cell in groups]

    def solve(members: List[int]) -> List[int]:
        return cell_subtour(pts, members, exact_limit)

    if workers > 0:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as executor:
            cycles = list(executor.map(solve, cells))
    else:
        cycles = [solve(members) for members in cells]
    return make_tour(ps, _join_subtours(pts, cycles))


def tsp_trial(n: int, oracle: bool, seed: int, index: int, rng: Rng, cell_workers: int = 0) -> ExperimentRecord:
    ps = uniform_points(n, rng)
    tour = stitch(ps, cell_workers)
    dissection = build_dissection(ps)
    valid = sorted(tour.order) == list(range(n)) and math.isfinite(tour.length)
    oracle_length = held_karp(ps).length if oracle and n <= ORACLE_LIMIT else math.nan
    return ExperimentRecord(
        experiment='tsp',
        params={'n': n, 'trial': index},
        seed=seed,
        stats={
            'stitch_length': tour.length,
            'length_over_sqrt_n': tour.length / math.sqrt(n),
            'max_cell_occupancy': float(max_cell_occupancy(dissection)),
            'occupancy_bound': occupancy_bound(n),
            'oracle_length': oracle_length,
            't0_length': representative_tour(ps, dissection).length,
            't0_bound': boustrophedon_bound(n),
            'invalid_tours': 0.0 if valid else 1.0,
        },
    )


def sqrt_n_lower_bound_experiment(n: int, trials: int, seed: int, oracle: bool = False,
                                  workers: int = 0) -> List[ExperimentRecord]:
    """
    Stitch tour length over sqrt(n) on uniform points, one record per trial.

    Args:
        n: Points per instance, at least 3
        trials: Number of instances
        seed: Master seed
        oracle: Also solve exactly with Held-Karp when n <= 14
        workers: Thread count; spread over trials, or over the cells of a
            single trial
    """
    if n < 3:
        raise InvalidInputError(f"n must be >= 3, got {n}")
    if oracle and n > ORACLE_LIMIT:
        logger.warning(f"Oracle comparison skipped: n={n} exceeds {ORACLE_LIMIT}")
    logger.info(f"TSP experiment: n={n}, {trials} trials")
    trial_workers, cell_workers = (workers, 0) if trials > 1 else (0, workers)
    return run_trials(lambda index, rng: tsp_trial(n, oracle, seed, index, rng, cell_workers),
                      seed, trials, trial_workers)


def tsp_experiment(ns: Sequence[int], trials: int, seed: int, oracle: bool = False,
                   workers: int = 0) -> List[ExperimentRecord]:
    records = []
    for n in ns:
        records.extend(sqrt_n_lower_bound_experiment(n, trials, seed, oracle, workers))
    return records


def tsp_violations(records: Sequence[ExperimentRecord], tolerance: float = 1e-9) -> List[str]:
    """Trials with an invalid tour, a tour beating the optimum, or an overlong representative tour."""
    problems = []
    for r in records:
        label = f"n={r.params['n']} trial {r.params['trial']}"
        s = r.stats
        if s['invalid_tours'] > 0:
            problems.append(f"{label}: stitch tour is not a permutation")
        if not math.isnan(s['oracle_length']) and s['stitch_length'] < s['oracle_length'] - tolerance:
            problems.append(f"{label}: stitch length {s['stitch_length']} below optimum {s['oracle_length']}")
        if s['t0_length'] > s['t0_bound']:
            problems.append(f"{label}: representative tour {s['t0_length']} exceeds {s['t0_bound']}")
    return problems


if __name__ == '__main__':
    corners = PointSet(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)))
    print(held_karp(corners), stitch(corners))
