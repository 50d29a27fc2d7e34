import math

import pytest

from tfpack.generators import gen_named, gen_random_regular
from tfpack.partitioner import split_V_W
from tfpack.path_cover import PartitionFailed, assemble_paths, build_path_cover, chain_matchings


def assert_cover(g, cover, V):
    Vset = set(int(v) for v in V)
    seen = set()
    for path in cover.paths:
        assert len(path) == cover.m
        assert set(path) <= Vset
        assert not seen & set(path)
        seen |= set(path)
        for a, b in zip(path, path[1:]):
            assert g.has_edge(a, b)


def test_assemble_three_singletons():
    paths, frag = assemble_paths([{0: 1}, {1: 2}], [[0], [1], [2]])
    assert paths == [(0, 1, 2)] and frag == 0


def test_assemble_aligned_perfect_matchings():
    classes = [[0, 1, 2], [3, 4, 5], [6, 7, 8]]
    paths, frag = assemble_paths([{0: 4, 1: 3, 2: 5}, {3: 6, 4: 7, 5: 8}], classes)
    assert paths == [(0, 4, 7), (1, 3, 6), (2, 5, 8)]
    assert frag == 0


def test_assemble_empty_matching_gives_nothing():
    classes = [[0, 1], [2, 3], [4, 5]]
    paths, frag = assemble_paths([{0: 2, 1: 3}, {}], classes)
    assert paths == [] and frag == 2


def test_assemble_accepts_reversed_pairs_and_counts_fragments():
    classes = [[0, 1], [2, 3], [4, 5]]
    paths, frag = assemble_paths([[(2, 0)], [(3, 5)]], classes)
    assert paths == [] and frag == 2


@pytest.mark.parametrize(
    "matchings,classes",
    [
        ([{0: 1}], [[0], [1], [2]]),  # wrong number of matchings
        ([{0: 2}, {2: 1}], [[0], [1], [2]]),  # pair skips a class
        ([[(0, 2), (1, 2)]], [[0, 1], [2]]),  # not a matching
    ],
)
def test_assemble_rejects_bad_input(matchings, classes):
    with pytest.raises(ValueError):
        assemble_paths(matchings, classes)


def test_assemble_checks_edges():
    g = gen_named("P3")
    with pytest.raises(ValueError):
        assemble_paths([{0: 2}], [[0], [2]], g)


def test_path_on_ten_vertices_by_hand():
    # classes of the natural 5-colouring by position mod 5 along P10
    g = gen_named("P10")
    classes = [[0, 5], [1, 6], [2, 7], [3, 8], [4, 9]]
    matchings = chain_matchings(g, classes)
    paths, frag = assemble_paths(matchings, classes, g)
    assert paths == [(0, 1, 2, 3, 4), (5, 6, 7, 8, 9)]
    assert frag == 0


def test_path_on_ten_vertices_generous():
    g = gen_named("P10")
    cover = build_path_cover(g, range(10), 5, 2, 0.5, 0.9, seed=0, strict=False, size_gamma=1.0)
    assert_cover(g, cover, range(10))
    assert len(cover.paths) <= 2


def test_c4_with_m2():
    g = gen_named("C4")
    cover = build_path_cover(g, range(4), 2, 2, 0.5, 0.5, seed=0, strict=False)
    assert_cover(g, cover, range(4))
    # a maximum matching of the class bipartite graph
    if cover.stats["partition_ok"]:
        assert len(cover.paths) == 2
    assert cover.stats["endvertex_bound_ok"]  # 4d/m = 4 exceeds every degree


def test_m_must_be_at_least_two():
    with pytest.raises(ValueError):
        build_path_cover(gen_named("C4"), range(4), 1, 2, 0.5, 0.5)


def test_strict_failure_raises():
    g = gen_named("C6")
    with pytest.raises(PartitionFailed):
        build_path_cover(g, range(6), 3, 2, 0.0, 0.1, partition_kw={"max_rounds": 20})


@pytest.mark.parametrize("seed", [0, 1])
def test_regular_graph_cover(seed):
    n, d, p, m, eps = 2048, 48, 0.1, 8, 0.1
    g = gen_random_regular(n, d, seed)
    V, W = split_V_W(g, p, 0.4, seed=seed, d=d)
    cover = build_path_cover(g, V, m, d, 0.4, eps, seed=seed)
    assert_cover(g, cover, V)
    assert len(cover.paths) >= math.ceil((1 - eps) * len(V) / m)
    ends = cover.endvertices
    for v in range(n):
        assert sum(u in ends for u in g.adj[v]) <= 4 * d / m
    assert cover.stats["shortfall"] == 0


def test_warm_start_never_hurts_path_count():
    g = gen_random_regular(600, 24, 3)
    V, _ = split_V_W(g, 0.1, 0.4, seed=3, d=24)
    cover = build_path_cover(g, V, 6, 24, 0.4, 0.1, seed=3)
    # without the warm start: plain maximum matchings in class order
    from tfpack.matching import hopcroft_karp

    cold = []
    for i in range(len(cover.classes) - 1):
        right = set(cover.classes[i + 1].tolist())
        left = cover.classes[i].tolist()
        cold.append(hopcroft_karp(left, {u: [w for w in g.adj[u] if w in right] for u in left}))
    cold_paths, _ = assemble_paths(cold, cover.classes)
    assert [len(mt) for mt in cold] == cover.stats["matching_sizes"]
    assert len(cover.paths) >= len(cold_paths)
