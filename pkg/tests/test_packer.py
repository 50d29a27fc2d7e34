import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfpack.finder import FinderBudget
from tfpack.generators import gen_named, gen_random_regular, named_pattern
from tfpack.graph_core import SubdivisionWitness, build_graph, validate_packing, validate_witness
from tfpack.harness import check_members
from tfpack.packer import (
    AuxiliaryGraph,
    InvariantViolation,
    LabelMissing,
    PackerConfig,
    PackerState,
    build_aux,
    expand_witness,
    pack_core,
    pack_full,
    select_prefix,
)
from tfpack.path_cover import PathCover

C3 = named_pattern("C3")


def assert_members_ok(g, packing):
    assert validate_packing(g, packing).valid
    if packing.trace:
        t = packing.trace
        assert check_members(packing, t["W"], t["paths"], t["m"]) == []


# --------------------------------------------------------------------------
# configuration


@pytest.mark.parametrize(
    "kw", [dict(p=0.5), dict(p=0), dict(m=1), dict(epsilon=1.0), dict(gamma=0), dict(u_prime_fraction=0), dict(eta=1.0)]
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        PackerConfig(**kw)


def test_config_derived_values():
    cfg = PackerConfig(m=8, gamma=0.7)
    assert cfg.beta == 0.5
    assert cfg.partition_gamma == 0.5


# --------------------------------------------------------------------------
# auxiliary graph


def _star_host():
    # W = {0, 1, 2}; path 0 is 3-4-5, path 1 is 6-7-8
    # 0 ~ 3, 1 ~ 5, 2 ~ 5, 0 ~ 6, 1 ~ 8
    edges = [(3, 4), (4, 5), (6, 7), (7, 8), (0, 3), (1, 5), (2, 5), (0, 6), (1, 8)]
    return build_graph(9, edges), PathCover([(3, 4, 5), (6, 7, 8)], 3)


def test_aux_edgeless_without_labels():
    g, cover = _star_host()
    aux = build_aux(g, cover, [0, 1, 2], [])
    assert aux.edges == {} and aux.is_maximal()


def test_aux_forced_single_edge():
    g, cover = _star_host()
    aux = build_aux(g, cover, [0, 1], [0])
    assert aux.edges == {(0, 1): (0, 0, 1)}
    assert aux.label_of == {0: (0, 1)}


def test_aux_shared_pair_gets_one_label():
    # both paths can only join 0 and 1; the simple graph L takes one of them
    g, cover = _star_host()
    aux = build_aux(g, cover, [0, 1], [0, 1])
    assert list(aux.edges) == [(0, 1)]
    assert aux.edges[(0, 1)][0] == 0
    assert aux.unused_labels() == [1]
    assert aux.is_maximal()


def test_aux_takes_lexicographically_first_pair():
    # label 0 sees {0} x {1, 2}: takes 01; label 1 sees {0} x {1}: 01 is taken
    g, cover = _star_host()
    aux = build_aux(g, cover, [0, 1, 2], [0, 1])
    assert aux.edges == {(0, 1): (0, 0, 1)}
    assert aux.is_maximal()


def test_aux_edges_attach_to_path_ends():
    g = gen_random_regular(400, 20, 1)
    paths = [tuple(range(10 + 4 * i, 14 + 4 * i)) for i in range(40)]
    paths = [p for p in paths if all(g.has_edge(a, b) for a, b in zip(p, p[1:]))]
    cover = PathCover(paths, 4)
    U = list(range(200, 400))
    aux = build_aux(g, cover, U, range(len(paths)))
    assert aux.is_maximal()
    for (a, b), (i, ex, ey) in aux.edges.items():
        assert {a, b} == {ex, ey}
        assert g.has_edge(ex, cover.paths[i][0]) and g.has_edge(ey, cover.paths[i][-1])
    assert len(aux.label_of) == len(aux.edges)


def test_add_edge_rules():
    g, cover = _star_host()
    aux = AuxiliaryGraph(g, cover, [0, 1, 2])
    aux.allowed = {0, 1}
    aux.add_edge(0, 1, 0)
    with pytest.raises(ValueError):
        aux.add_edge(0, 1, 1)  # edge already present
    with pytest.raises(ValueError):
        aux.add_edge(0, 2, 0)  # label already used
    with pytest.raises(ValueError):
        aux.add_edge(2, 1, 1)  # 2 is not next to 6


def test_restrict_drops_edges():
    g, cover = _star_host()
    aux = build_aux(g, cover, [0, 1, 2], [0, 1])
    aux.restrict({0, 2}, {0, 1})
    assert all(0 in e or 2 in e for e in aux.edges)
    assert 1 not in aux.vertices


# --------------------------------------------------------------------------
# expansion


def _triangle_instance(m=5):
    # W = {0, 1, 2}; three paths of m vertices; label i joins W pairs of a triangle
    n = 3 + 3 * m
    paths = [tuple(range(3 + i * m, 3 + (i + 1) * m)) for i in range(3)]
    edges = [e for p in paths for e in zip(p, p[1:])]
    ends = [(0, 1), (1, 2), (0, 2)]
    for (a, b), p in zip(ends, paths):
        edges += [(a, p[0]), (b, p[-1])]
    g = build_graph(n, edges)
    cover = PathCover(paths, m)
    aux = build_aux(g, cover, [0, 1, 2], [0, 1, 2])
    return g, cover, aux


def test_expand_triangle():
    m = 5
    g, cover, aux = _triangle_instance(m)
    assert len(aux.edges) == 3
    w_L = SubdivisionWitness(C3, (0, 1, 2), {(0, 1): (0, 1), (1, 2): (1, 2), (0, 2): (0, 2)})
    H = expand_witness(w_L, aux)
    assert validate_witness(g, H).ok
    assert H.size == 18
    assert all(len(p) == m + 2 for p in H.subdiv_paths.values())
    in_w = len(H.vertices() & {0, 1, 2})
    assert in_w == 3 and in_w <= 2 * 18 / m


def test_expand_subdivided_edge():
    # a path 0 - 2 - 1 in L stands for one pattern edge
    g, cover, aux = _triangle_instance(3)
    P2 = named_pattern("P2")
    w_L = SubdivisionWitness(P2, (0, 1), {(0, 1): (0, 2, 1)})
    H = expand_witness(w_L, aux)
    assert validate_witness(g, H).ok
    assert len(H.subdiv_paths[(0, 1)]) == 3 + 2 * 3


def test_expand_label_missing():
    g, cover, aux = _triangle_instance(3)
    del aux.edges[(0, 2)]
    w_L = SubdivisionWitness(C3, (0, 1, 2), {(0, 1): (0, 1), (1, 2): (1, 2), (0, 2): (0, 2)})
    with pytest.raises(LabelMissing):
        expand_witness(w_L, aux)


# --------------------------------------------------------------------------
# state bookkeeping


def test_state_rejects_partial_path_use():
    g, cover, aux = _triangle_instance(3)
    state = PackerState(g, range(3, 12), [0, 1, 2], cover, 0.25, 3)
    w = SubdivisionWitness(C3, (0, 1, 2), {(0, 1): (0, 3, 4, 5, 1), (1, 2): (1, 6, 7, 8, 2), (0, 2): (0, 11, 2)})
    with pytest.raises(InvariantViolation):
        state.check_member(w)


def test_state_insert_updates_sets():
    g, cover, aux = _triangle_instance(3)
    state = PackerState(g, range(3, 12), [0, 1, 2], cover, 0.25, 3)
    w_L = SubdivisionWitness(C3, (0, 1, 2), {(0, 1): (0, 1), (1, 2): (1, 2), (0, 2): (0, 2)})
    H = expand_witness(w_L, aux)
    state.insert(H)
    assert state.J == set() and state.U == set()
    state.check_all()
    with pytest.raises(InvariantViolation):
        state.insert(H)


# --------------------------------------------------------------------------
# prefix selection


def test_prefix_worked_example():
    # one isolated vertex per member: target 21 is first reached at j = 3
    ell, z, fallback = select_prefix([10, 8, 6], 1, 30, 0.3)
    assert z == [11, 20, 27]
    assert ell == 3 and not fallback


def test_prefix_two_isolated_vertices():
    # z_2 = 22 already reaches the target of 21
    ell, z, fallback = select_prefix([10, 8, 6], 2, 30, 0.3)
    assert z == [12, 22, 30]
    assert ell == 2 and not fallback


def test_prefix_stops_at_target():
    ell, z, fallback = select_prefix([10, 8, 6], 1, 30, 0.5)
    assert ell == 2 and not fallback


def test_prefix_fallback_when_overshooting():
    ell, z, fallback = select_prefix([10, 8, 6], 3, 30, 0.0)
    assert z == [13, 24, 33]
    assert ell == 2 and fallback


def test_prefix_without_isolated_vertices():
    ell, z, _ = select_prefix([5, 4], 0, 100, 0.1)
    assert z == [5, 9] and ell == 2


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(3, 40), max_size=12), st.integers(0, 3), st.integers(1, 400), st.floats(0, 0.99))
def test_prefix_properties(sizes, extra, n, eta):
    sizes = sorted(sizes, reverse=True)
    ell, z, fallback = select_prefix(sizes, extra, n, eta)
    assert z == [sum(s + extra for s in sizes[:j]) for j in range(1, len(sizes) + 1)]
    assert 0 <= ell <= len(sizes)
    if ell:
        assert z[ell - 1] <= n
    if not fallback:
        assert z[ell - 1] >= (1 - eta) * n - 1e-9
        assert all(zj < (1 - eta) * n - 1e-9 for zj in z[: ell - 1])


# --------------------------------------------------------------------------
# end to end


def test_cycle_has_no_k4():
    g = gen_named("C40")
    packing = pack_full(g, named_pattern("K4"), PackerConfig(u_prime_fraction=1.0))
    assert packing.witnesses == [] and packing.coverage_fraction == 0


def test_clique_union_keeps_invariants():
    # each member needs 3 vertices of W plus three whole paths of m >= 2
    # vertices, all in one component, so 8-vertex cliques cannot host any
    k = 8
    g = build_graph(10 * k, [(k * c + a, k * c + b) for c in range(10) for a in range(k) for b in range(a + 1, k)])
    for cfg in (PackerConfig(p=0.25, m=2, u_prime_fraction=1.0), PackerConfig()):
        packing = pack_full(g, C3, cfg)
        assert_members_ok(g, packing)
        assert packing.coverage_fraction == 0


def test_larger_cliques_get_packed():
    k = 16
    g = build_graph(10 * k, [(k * c + a, k * c + b) for c in range(10) for a in range(k) for b in range(a + 1, k)])
    packing = pack_full(g, C3, PackerConfig(p=0.3, m=2, u_prime_fraction=1.0))
    assert_members_ok(g, packing)
    assert packing.coverage_fraction > 0


@pytest.mark.parametrize("pattern", ["C3", "C4", "K4", "K4-e"])
def test_regular_graph_invariants(pattern):
    g = gen_random_regular(800, 32, 5)
    packing = pack_full(g, named_pattern(pattern))
    assert_members_ok(g, packing)
    assert packing.coverage_fraction > 0.2
    assert packing.stats["witnesses"] == len(packing.witnesses)


def test_c4_on_64_regular_defaults():
    g = gen_random_regular(2000, 64, 0)
    packing = pack_full(g, named_pattern("C4"))
    assert_members_ok(g, packing)
    assert packing.coverage_fraction > 0.5


def test_edge_plus_isolated_vertex():
    g = gen_random_regular(500, 32, 1)
    packing = pack_full(g, named_pattern("P2+K1"))
    assert validate_packing(g, packing).valid
    assert packing.witnesses
    assert all(len(w.iso_vertices) == 1 for w in packing.witnesses)


def test_pattern_without_edges():
    g = gen_named("petersen")
    packing = pack_full(g, named_pattern("empty3"))
    assert len(packing.witnesses) == 3
    assert validate_packing(g, packing).valid


def test_pack_core_rejects_isolated_vertices():
    with pytest.raises(ValueError):
        pack_core(gen_named("K5"), named_pattern("C3+K1"))


def test_deterministic():
    g = gen_random_regular(600, 24, 2)
    a = pack_full(g, named_pattern("K4-e"), PackerConfig(seed=3))
    b = pack_full(g, named_pattern("K4-e"), PackerConfig(seed=3))
    assert a.witnesses == b.witnesses and a.stats == b.stats


def test_exhaustive_finder_budget_in_config():
    g = gen_random_regular(300, 24, 4)
    cfg = PackerConfig(finder=FinderBudget(node_budget=5000, strategy="dense_greedy"))
    assert_members_ok(g, pack_full(g, C3, cfg))


def test_members_meet_w_bound():
    g = gen_random_regular(1000, 48, 8)
    cfg = PackerConfig()
    packing = pack_full(g, named_pattern("K4"), cfg)
    W = set(packing.trace["W"])
    for w in packing.witnesses:
        vs = w.vertices()
        assert len(vs & W) <= math.floor(2 * len(vs) / cfg.m)
