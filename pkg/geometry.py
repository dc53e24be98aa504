"""
Planar convex hulls of points in the unit square: a divide-and-conquer
algorithm with a linear-time merge, and a quadratic brute-force oracle.

Hull vertices are strict: points in the relative interior of a hull edge
are not reported.
"""
import heapq
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key
from typing import List, Optional, Sequence, Tuple

from common import ExperimentRecord, Rng, mean_and_stderr, run_trials
from utils import InvalidInputError, setup_logging

logger = setup_logging(__name__)

Point = Tuple[float, float]

BRUTEFORCE_LIMIT = 2000
BASE_CASE_SIZE = 5
# Float filter for orientation; beyond this relative bound the float sign is exact
_EPSILON = 2.0 ** -53
_CCW_ERRBOUND = (3.0 + 16.0 * _EPSILON) * _EPSILON


class OrientationCounter:
    """Counts orientation tests, for checking merge and total work bounds."""

    def __init__(self):
        self.count = 0


def orientation(p: Point, q: Point, r: Point, counter: Optional[OrientationCounter] = None) -> int:
    """
    Exact sign of the turn p -> q -> r.

    Returns:
        +1 for a counterclockwise turn, -1 for clockwise, 0 for collinear
    """
    if counter is not None:
        counter.count += 1
    left = (p[0] - r[0]) * (q[1] - r[1])
    right = (p[1] - r[1]) * (q[0] - r[0])
    det = left - right
    if abs(det) > _CCW_ERRBOUND * (abs(left) + abs(right)):
        return 1 if det > 0 else -1
    px, py, qx, qy, rx, ry = (Fraction(c) for c in (*p, *q, *r))
    exact = (qx - px) * (ry - py) - (qy - py) * (rx - px)
    return (exact > 0) - (exact < 0)


@dataclass(frozen=True)
class PointSet:
    """Points in the unit square; duplicates only when allow_duplicates is set."""
    points: Tuple[Point, ...]
    allow_duplicates: bool = False

    def __post_init__(self):
        points = tuple((float(x), float(y)) for x, y in self.points)
        object.__setattr__(self, 'points', points)
        for x, y in points:
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise InvalidInputError(f"Point ({x}, {y}) lies outside the unit square")
        if not self.allow_duplicates and len(set(points)) != len(points):
            raise InvalidInputError("Duplicate points need allow_duplicates=True")

    def __len__(self) -> int:
        return len(self.points)


@dataclass(frozen=True)
class Hull:
    """Strict hull vertices, counterclockwise from the lexicographically smallest."""
    vertices: Tuple[Point, ...]
    _sorted: Tuple[Point, ...] = field(default=None, repr=False, compare=False)

    @property
    def sorted_by_x(self) -> Tuple[Point, ...]:
        """
        Vertices in (x, y) order, in linear time.

        The ccw list runs along the lower chain up to the largest vertex and
        back along the upper chain, so it is two sorted runs.
        """
        if self._sorted is None:
            v = self.vertices
            if not v:
                ordered: Tuple[Point, ...] = ()
            else:
                top = max(range(len(v)), key=lambda i: v[i])
                ordered = tuple(heapq.merge(v[:top + 1], reversed(v[top + 1:])))
            object.__setattr__(self, '_sorted', ordered)
        return self._sorted

    def __len__(self) -> int:
        return len(self.vertices)


def uniform_points(n: int, rng: Rng) -> PointSet:
    coords = rng.random((n, 2))
    return PointSet(tuple((float(x), float(y)) for x, y in coords), allow_duplicates=True)


def _same_direction(p: Point, a: Point, b: Point) -> bool:
    """For a, b collinear with p: whether they lie on the same side of p."""
    # On a vertical line through p both x offsets are zero, otherwise neither is
    if a[0] != p[0]:
        return (a[0] > p[0]) == (b[0] > p[0])
    return (a[1] > p[1]) == (b[1] > p[1])


def _is_strict_vertex(p: Point, others: Sequence[Point], counter: Optional[OrientationCounter]) -> bool:
    """
    Whether the directions from p to every other point fit in an open half-plane.

    Keeps the smallest arc [low, high] (measured counterclockwise, always
    below a half-turn) containing every direction seen so far.
    """
    low = high = None
    for q in others:
        if low is None:
            low = high = q
            continue
        from_low = orientation(p, low, q, counter)
        to_high = orientation(p, q, high, counter)
        inside = (from_low > 0 or (from_low == 0 and _same_direction(p, low, q))) and \
                 (to_high > 0 or (to_high == 0 and _same_direction(p, q, high)))
        if low == high:
            inside = from_low == 0 and _same_direction(p, low, q)
        if inside:
            continue
        if from_low > 0:
            high = q
        elif to_high > 0:
            low = q
        else:
            return False
    return True


def _ccw_from_lowest(vertices: List[Point], counter: Optional[OrientationCounter]) -> Tuple[Point, ...]:
    """Order points in strictly convex position counterclockwise from the smallest."""
    if len(vertices) <= 2:
        return tuple(sorted(vertices))
    anchor = min(vertices)
    rest = [v for v in vertices if v != anchor]
    rest.sort(key=cmp_to_key(lambda a, b: -orientation(anchor, a, b, counter)))
    return (anchor, *rest)


def hull_bruteforce(ps: PointSet, counter: Optional[OrientationCounter] = None) -> Hull:
    """
    Hull by testing every point against all others.

    A point is a strict vertex iff the directions to all other distinct
    points lie in an open half-plane, i.e. it is neither inside the hull of
    the others nor in the interior of one of its edges.

    Raises:
        InvalidInputError: For more than 2000 points
    """
    if len(ps) > BRUTEFORCE_LIMIT:
        raise InvalidInputError(f"Brute-force hull supports at most {BRUTEFORCE_LIMIT} points, got {len(ps)}")
    return _bruteforce_points(list(ps.points), counter)


def _bruteforce_points(points: List[Point], counter: Optional[OrientationCounter]) -> Hull:
    distinct = sorted(set(points))
    if len(distinct) <= 1:
        return Hull(tuple(distinct))
    vertices = [p for p in distinct
                if _is_strict_vertex(p, [q for q in distinct if q != p], counter)]
    return Hull(_ccw_from_lowest(vertices, counter))


def _monotone_chain(points: Sequence[Point], counter: Optional[OrientationCounter]) -> Hull:
    """Strict hull of distinct points already in (x, y) order."""
    if len(points) <= 2:
        return Hull(tuple(points))
    lower: List[Point] = []
    for p in points:
        while len(lower) >= 2 and orientation(lower[-2], lower[-1], p, counter) <= 0:
            lower.pop()
        lower.append(p)
    upper: List[Point] = []
    for p in reversed(points):
        while len(upper) >= 2 and orientation(upper[-2], upper[-1], p, counter) <= 0:
            upper.pop()
        upper.append(p)
    return Hull(tuple(lower[:-1] + upper[:-1]))


def merge_hulls(c1: Hull, c2: Hull, counter: Optional[OrientationCounter] = None) -> Hull:
    """
    Hull of the union of two hulls in linear time.

    Merges the two x-sorted vertex lists, drops repeated points, then runs
    one monotone-chain pass for the lower and upper chains.
    """
    merged: List[Point] = []
    for p in heapq.merge(c1.sorted_by_x, c2.sorted_by_x):
        if not merged or merged[-1] != p:
            merged.append(p)
    return _monotone_chain(merged, counter)


def hull_divide_conquer(ps: PointSet, counter: Optional[OrientationCounter] = None) -> Hull:
    """
    Divide-and-conquer hull.

    Splits by input order (not by position) at n/2, solves each half
    recursively, and merges; at most five points are solved by brute force.

    Args:
        ps: Nonempty point set
        counter: Optional orientation test counter

    Returns:
        Hull with strict vertices
    """
    if len(ps) < 1:
        raise InvalidInputError("Hull needs at least one point")
    return _divide_conquer(list(ps.points), counter)


def _divide_conquer(points: List[Point], counter: Optional[OrientationCounter]) -> Hull:
    if len(points) <= BASE_CASE_SIZE:
        return _bruteforce_points(points, counter)
    middle = len(points) // 2
    return merge_hulls(_divide_conquer(points[:middle], counter),
                       _divide_conquer(points[middle:], counter), counter)


def hull_contains(hull: Hull, p: Point) -> bool:
    """Whether p lies inside or on the hull polygon."""
    v = hull.vertices
    if not v:
        return False
    if len(v) == 1:
        return v[0] == p
    if len(v) == 2:
        a, b = v
        return (orientation(a, b, p) == 0
                and min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= p[1] <= max(a[1], b[1]))
    return all(orientation(v[i], v[(i + 1) % len(v)], p) >= 0 for i in range(len(v)))


def is_convex_position(hull: Hull) -> bool:
    """Every consecutive vertex triple turns strictly counterclockwise."""
    v = hull.vertices
    if len(v) < 3:
        return len(set(v)) == len(v)
    return all(orientation(v[i], v[(i + 1) % len(v)], v[(i + 2) % len(v)]) > 0 for i in range(len(v)))


def hull_size_experiment(ns: Sequence[int], trials: int, seed: int, workers: int = 0) -> List[ExperimentRecord]:
    """
    Mean hull size of n uniform points, per n.

    Args:
        ns: Point counts to sweep
        trials: Point sets per n
        seed: Master seed
        workers: Thread count for trial fan-out

    Returns:
        One record per n
    """
    records = []
    for n in ns:
        if n < 1:
            raise InvalidInputError(f"n must be >= 1, got {n}")
        logger.info(f"Hull experiment: n={n}, {trials} trials")

        def trial(index: int, rng: Rng):
            counter = OrientationCounter()
            hull = hull_divide_conquer(uniform_points(n, rng), counter)
            return len(hull), counter.count, is_convex_position(hull)

        results = run_trials(trial, seed, trials, workers)
        mean, stderr = mean_and_stderr([size for size, _, _ in results])
        work_scale = n * math.log2(n) if n > 1 else 1.0
        records.append(ExperimentRecord(
            experiment='hull',
            params={'n': n},
            seed=seed,
            stats={
                'mean_hull_size': mean,
                'mean_hull_size_over_ln_n': mean / math.log(n) if n > 1 else math.nan,
                'hull_size_stderr': stderr,
                'max_orientation_ratio': max(count for _, count, _ in results) / work_scale,
                'nonconvex_hulls': float(sum(1 for _, _, ok in results if not ok)),
            },
        ))
    return records


def hull_violations(records: Sequence[ExperimentRecord], work_constant: float = 32.0) -> List[str]:
    problems = []
    for r in records:
        n = r.params['n']
        if r.stats['nonconvex_hulls'] > 0:
            problems.append(f"n={n}: {int(r.stats['nonconvex_hulls'])} hulls not in strictly convex position")
        if n > 1 and r.stats['max_orientation_ratio'] > work_constant:
            problems.append(f"n={n}: orientation tests {r.stats['max_orientation_ratio']} n log n exceed {work_constant}")
        if r.stats['mean_hull_size'] > n:
            problems.append(f"n={n}: mean hull size {r.stats['mean_hull_size']} exceeds n")
    return problems


if __name__ == '__main__':
    square = PointSet(((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)))
    print(hull_divide_conquer(square).vertices)
