import io
import math

import numpy as np
import pytest

from common import Rng
from graphs import (
    Graph,
    PlantedBisection,
    bisection_accuracy,
    bisection_cut,
    bisection_recovered,
    clique_number_crossing,
    common_neighbor_bisection,
    default_clique_size,
    expected_k_cliques,
    gen_er,
    gen_planted_bisection,
    gen_planted_clique,
    graphs_experiment,
    graphs_violations,
    greedy_clique,
    is_clique,
    random_bisection,
    read_edge_list,
    sampled_cut_range,
    top_k_degrees,
    write_edge_list,
)
from utils import InvalidInputError


def complete(n):
    return Graph(~np.eye(n, dtype=bool))


def empty(n):
    return Graph(np.zeros((n, n), dtype=bool))


def star(n):
    adjacency = np.zeros((n, n), dtype=bool)
    adjacency[0, 1:] = adjacency[1:, 0] = True
    return Graph(adjacency)


def test_graph_validation():
    with pytest.raises(InvalidInputError):
        Graph(np.eye(3, dtype=bool))
    asymmetric = np.zeros((3, 3), dtype=bool)
    asymmetric[0, 1] = True
    with pytest.raises(InvalidInputError):
        Graph(asymmetric)
    with pytest.raises(InvalidInputError):
        Graph(np.zeros((2, 3), dtype=bool))


def test_er_extremes(rng):
    assert gen_er(3, 1.0, rng).edge_count() == 3
    assert gen_er(100, 0.0, rng).edge_count() == 0
    with pytest.raises(InvalidInputError):
        gen_er(10, 1.5, rng)


def test_er_edge_count_concentrates(rng):
    pairs = 200 * 199 // 2
    sigma = math.sqrt(pairs / 4)
    for _ in range(5):
        assert abs(gen_er(200, 0.5, rng).edge_count() - pairs / 2) <= 4 * sigma


def test_generation_is_reproducible():
    a = gen_planted_bisection(40, 0.7, 0.2, Rng(5))
    b = gen_planted_bisection(40, 0.7, 0.2, Rng(5))
    assert np.array_equal(a.adjacency, b.adjacency)
    assert a.planted == b.planted


def test_planted_bisection_two_triangles(rng):
    g = gen_planted_bisection(6, 1.0, 0.0, rng)
    assert g.edge_count() == 6
    s, t = sorted(g.planted.s), sorted(g.planted.t)
    assert is_clique(g, s) and is_clique(g, t)
    assert bisection_cut(g, (g.planted.s, g.planted.t)) == 0
    found = common_neighbor_bisection(g)
    assert bisection_recovered(g, found)
    assert bisection_accuracy(g, found) == 1.0


def test_planted_bisection_preconditions(rng):
    with pytest.raises(InvalidInputError):
        gen_planted_bisection(7, 0.5, 0.25, rng)
    with pytest.raises(InvalidInputError):
        gen_planted_bisection(8, 0.25, 0.5, rng)


def test_planted_bisection_densities(rng):
    n = 500
    g = gen_planted_bisection(n, 0.5, 0.25, rng)
    s = sorted(g.planted.s)
    intra_pairs = 2 * (n // 2) * (n // 2 - 1) // 2
    intra = (g.adjacency[np.ix_(s, s)].sum() + g.adjacency[np.ix_(sorted(g.planted.t), sorted(g.planted.t))].sum()) // 2
    sigma = math.sqrt(intra_pairs * 0.25)
    assert abs(intra - 0.5 * intra_pairs) <= 4 * sigma
    cross = bisection_cut(g, (g.planted.s, g.planted.t))
    assert abs(cross - 0.25 * (n // 2) ** 2) <= 4 * math.sqrt((n // 2) ** 2 * 0.25 * 0.75)


def test_planted_bisection_collapses_to_er(rng):
    n = 200
    pairs = n * (n - 1) // 2
    counts = [gen_planted_bisection(n, 0.5, 0.5, rng).edge_count() for _ in range(5)]
    assert all(abs(c - pairs / 2) <= 4 * math.sqrt(pairs / 4) for c in counts)


def test_planted_clique_is_complete(rng):
    g = gen_planted_clique(60, 15, rng)
    assert len(g.planted.members) == 15
    assert is_clique(g, g.planted.members)
    assert gen_planted_clique(10, 10, rng).edge_count() == 45
    with pytest.raises(InvalidInputError):
        gen_planted_clique(10, 0, rng)


def test_top_k_degrees():
    assert top_k_degrees(complete(7), 7) == frozenset(range(7))
    assert top_k_degrees(star(9), 1) == frozenset({0})
    # Ties go to the lowest indices
    assert top_k_degrees(empty(5), 2) == frozenset({0, 1})
    with pytest.raises(InvalidInputError):
        top_k_degrees(empty(5), 6)


def test_relabel_commutes_with_top_k():
    # Clique degrees sit far above the rest, so no tie straddles the k-th place
    n, k = 100, 70
    for index in range(20):
        rng = Rng(41, index)
        g = gen_planted_clique(n, k, rng)
        degrees = np.sort(g.degrees())[::-1]
        assert degrees[k - 1] > degrees[k]
        perm = rng.permutation(n)
        relabeled = g.relabel(perm)
        assert relabeled.planted.members == frozenset(perm[v] for v in g.planted.members)
        assert top_k_degrees(relabeled, k) == frozenset(perm[v] for v in top_k_degrees(g, k))
        assert top_k_degrees(g, k) == g.planted.members


def test_relabel_keeps_edges(rng):
    g = gen_planted_clique(80, 20, rng)
    perm = rng.permutation(80)
    relabeled = g.relabel(perm)
    assert is_clique(relabeled, relabeled.planted.members)
    assert np.array_equal(np.sort(relabeled.degrees()), np.sort(g.degrees()))
    for u, v in [(0, 1), (3, 70), (12, 44)]:
        assert relabeled.has_edge(perm[u], perm[v]) == g.has_edge(u, v)


def test_greedy_clique_extremes(rng):
    assert len(greedy_clique(empty(10), rng)) == 1
    assert greedy_clique(complete(10), rng) == frozenset(range(10))


def test_greedy_always_returns_a_clique():
    for index in range(50):
        rng = Rng(13, index)
        g = gen_er(60, 0.3 + 0.01 * index, rng)
        assert is_clique(g, greedy_clique(g, rng.spawn(1)))


def test_common_neighbor_bisection_shape(rng):
    g = gen_planted_bisection(20, 0.6, 0.3, rng)
    a, b = common_neighbor_bisection(g)
    assert len(a) == len(b) == 10
    assert 0 in b
    with pytest.raises(InvalidInputError):
        common_neighbor_bisection(gen_er(7, 0.5, rng))


def test_common_neighbor_counts_by_hand():
    # 0 ~ 1, 2; 3 ~ 1, 2; 4 ~ 1; 5 isolated
    adjacency = np.zeros((6, 6), dtype=bool)
    for u, v in [(0, 1), (0, 2), (3, 1), (3, 2), (4, 1)]:
        adjacency[u, v] = adjacency[v, u] = True
    a, b = common_neighbor_bisection(Graph(adjacency))
    # Shared neighbors with 0: 3 has two, 4 has one, the rest none
    assert a == frozenset({1, 2, 5})
    assert b == frozenset({0, 3, 4})


def test_bisection_cut_examples(rng):
    k4 = complete(4)
    for _ in range(5):
        assert bisection_cut(k4, random_bisection(4, rng)) == 4
    assert bisection_cut(empty(8), random_bisection(8, rng)) == 0
    g = gen_er(30, 0.5, rng)
    a, b = random_bisection(30, rng)
    assert bisection_cut(g, (a, b)) == bisection_cut(g, (b, a))
    with pytest.raises(InvalidInputError):
        bisection_cut(k4, (frozenset({0}), frozenset({1, 2, 3})))


def test_sampled_cut_range_matches_direct_count(rng):
    g = gen_er(40, 0.5, rng)
    for seed in range(10):
        # One sample draws the same permutation as random_bisection
        direct = bisection_cut(g, random_bisection(40, Rng(seed)))
        assert sampled_cut_range(g, 1, Rng(seed)) == (direct, direct)
    low, high = sampled_cut_range(g, 200, Rng(1))
    assert low <= high
    assert sampled_cut_range(complete(6), 10, rng) == (9, 9)


def test_expected_k_cliques():
    assert expected_k_cliques(4, 2) == pytest.approx(3.0)
    assert expected_k_cliques(10, 0) == pytest.approx(1.0)
    assert expected_k_cliques(10, 1) == pytest.approx(10.0)
    with pytest.raises(InvalidInputError):
        expected_k_cliques(3, 4)


def test_clique_number_crossing():
    crossing = clique_number_crossing(1024)
    assert crossing == 16
    assert expected_k_cliques(1024, crossing - 1) >= 1.0 > expected_k_cliques(1024, crossing)


def test_edge_list_round_trip(rng):
    g = gen_er(25, 0.3, rng)
    sink = io.StringIO()
    write_edge_list(g, sink)
    assert sink.getvalue().splitlines()[0] == f"25 {g.edge_count()}"
    assert np.array_equal(read_edge_list(sink.getvalue()).adjacency, g.adjacency)
    with pytest.raises(InvalidInputError):
        read_edge_list("3 2\n0 1\n")


def test_default_clique_size():
    assert default_clique_size(4000) == 547
    assert default_clique_size(1) == 1
    assert default_clique_size(5) == 5


def test_planted_clique_on_one_vertex():
    record = graphs_experiment('planted-clique', 1, trials=2, seed=0)[0]
    assert record.params['k'] == 1
    assert record.stats['success_rate'] == 1.0


def test_small_experiments():
    for name in ('er-bisection', 'planted-bisection', 'planted-clique', 'greedy-clique'):
        records = graphs_experiment(name, 60, trials=3, seed=4, k=20)
        assert len(records) == 1
        assert records[0].experiment == f"graphs-{name}"
        assert 0.0 <= records[0].stats['success_rate'] <= 1.0
        assert graphs_violations(records) == []
    with pytest.raises(InvalidInputError):
        graphs_experiment('coloring', 60, trials=1, seed=0)


def test_bisection_recovery_needs_a_wide_gap():
    wide = graphs_experiment('planted-bisection', 500, trials=50, seed=2024, p=0.9, q=0.1)[0]
    narrow = graphs_experiment('planted-bisection', 500, trials=50, seed=2024, p=0.9, q=0.5)[0]
    assert wide.stats['success_rate'] >= 0.95
    assert wide.stats['success_rate'] > narrow.stats['success_rate']


def test_bisection_accuracy_grows_with_gap():
    wide = graphs_experiment('planted-bisection', 500, trials=10, seed=7, p=0.5, q=0.25)[0]
    narrow = graphs_experiment('planted-bisection', 500, trials=10, seed=7, p=0.5, q=0.45)[0]
    assert wide.stats['mean_accuracy'] >= 0.75
    assert wide.stats['mean_accuracy'] > narrow.stats['mean_accuracy']


@pytest.mark.slow
def test_er_cut_concentration():
    g = gen_er(200, 0.5, Rng(2024))
    low, high = sampled_cut_range(g, 10_000, Rng(2025))
    assert 0.95 * 200 ** 2 / 8 <= low <= high <= 1.05 * 200 ** 2 / 8


@pytest.mark.slow
def test_top_k_recovers_planted_clique():
    n = 4000
    record = graphs_experiment('planted-clique', n, trials=20, seed=2024)[0]
    assert record.params['k'] == default_clique_size(n)
    assert record.stats['success_rate'] >= 0.95


@pytest.mark.slow
def test_greedy_clique_near_log2_n():
    record = graphs_experiment('greedy-clique', 10_000, trials=50, seed=2024)[0]
    assert record.stats['success_rate'] >= 0.95
    assert record.stats['non_cliques'] == 0.0
