import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfpack.generators import gen_named, named_pattern
from tfpack.graph_core import (
    DuplicateEdge,
    GraphFormatError,
    Packing,
    SelfLoop,
    SubdivisionWitness,
    VertexOutOfRange,
    build_graph,
    dump_packing,
    format_edge_list,
    induced_subgraph,
    load_packing,
    read_edge_list,
    validate_packing,
    validate_witness,
    witness_from_dict,
    witness_to_dict,
)

C3 = named_pattern("C3")


def test_triangle_degrees():
    g = build_graph(3, [(0, 1), (1, 2), (2, 0)])
    assert g.degrees.tolist() == [2, 2, 2]
    assert g.num_edges == 3


def test_self_loop_rejected():
    with pytest.raises(SelfLoop):
        build_graph(2, [(0, 0)])


def test_duplicate_edge_rejected():
    with pytest.raises(DuplicateEdge):
        build_graph(4, [(0, 1), (0, 1)])
    with pytest.raises(DuplicateEdge):
        build_graph(4, [(0, 1), (1, 0)])


def test_out_of_range_rejected():
    with pytest.raises(VertexOutOfRange):
        build_graph(2, [(0, 2)])


def test_csr_matches_adjacency():
    g = gen_named("petersen")
    A = g.csr.toarray()
    assert (A == A.T).all()
    assert A.sum(axis=1).tolist() == g.degrees.tolist()


def test_induced_subgraph_relabels():
    g = gen_named("C6")
    sub, ids = induced_subgraph(g, [5, 0, 1])
    assert ids == [0, 1, 5]
    assert sub.edges == {(0, 1), (0, 2)}


def test_witness_identity_in_triangle():
    g = gen_named("C3")
    w = SubdivisionWitness(C3, (0, 1, 2), {(0, 1): (0, 1), (1, 2): (1, 2), (0, 2): (0, 2)})
    assert validate_witness(g, w).ok


def test_witness_subdivided_triangle_in_hexagon():
    g = gen_named("C6")
    w = SubdivisionWitness(C3, (0, 2, 4), {(0, 1): (0, 1, 2), (1, 2): (2, 3, 4), (0, 2): (0, 5, 4)})
    check = validate_witness(g, w)
    assert check.ok and check.reasons == []
    assert w.size == 6


def test_witness_internal_overlap():
    # the third path goes the long way round and reuses vertices 1 and 3
    g = gen_named("C6")
    w = SubdivisionWitness(C3, (0, 2, 4), {(0, 1): (0, 1, 2), (1, 2): (2, 3, 4), (0, 2): (0, 1, 2, 3, 4)})
    check = validate_witness(g, w)
    assert not check.ok
    assert "InternalOverlap" in check.reasons


@pytest.mark.parametrize(
    "bmap,paths,reason",
    [
        ((0, 0, 2), {(0, 1): (0, 1), (1, 2): (1, 2), (0, 2): (0, 2)}, "BranchNotInjective"),
        ((0, 1, 2), {(0, 1): (0, 1), (1, 2): (1, 2)}, "EdgeSetMismatch"),
        ((0, 1, 2), {(0, 1): (0, 1), (1, 2): (1, 2), (0, 2): (0, 3, 2)}, "NonAdjacentStep"),
        ((0, 1, 2), {(0, 1): (0, 1), (1, 2): (1, 2), (0, 2): (1, 2)}, "PathEndpointMismatch"),
        ((0, 1, 2), {(0, 1): (0, 1), (1, 2): (1, 2), (0, 2): (0, 1, 2)}, "InternalHitsBranch"),
        ((0, 1, 9), {(0, 1): (0, 1), (1, 2): (1, 9), (0, 2): (0, 9)}, "VertexOutOfRange"),
    ],
)
def test_witness_reason_codes(bmap, paths, reason):
    g = gen_named("K4-e")  # 2-3 is the missing edge
    check = validate_witness(g, SubdivisionWitness(C3, bmap, paths))
    assert not check.ok
    assert reason in check.reasons


def test_iso_vertices_counted():
    F = named_pattern("C3+K1")
    g = gen_named("K4")
    w = SubdivisionWitness(F, (0, 1, 2), {(0, 1): (0, 1), (1, 2): (1, 2), (0, 2): (0, 2)})
    assert validate_witness(g, w).reasons == ["IsoCountMismatch"]
    assert validate_witness(g, w.with_iso_vertices([3])).ok
    assert "IsoOverlap" in validate_witness(g, w.with_iso_vertices([2])).reasons


def _two_triangles():
    return build_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])


def _tri(a, b, c):
    return SubdivisionWitness(C3, (a, b, c), {(0, 1): (a, b), (1, 2): (b, c), (0, 2): (a, c)})


def test_empty_packing_valid():
    rep = validate_packing(gen_named("petersen"), Packing(10))
    assert rep.valid and rep.coverage == 0


def test_two_triangles_full_coverage():
    rep = validate_packing(_two_triangles(), Packing(6, [_tri(0, 1, 2), _tri(3, 4, 5)]))
    assert rep.valid and rep.coverage == 1.0


def test_overlapping_witnesses():
    g = gen_named("K4")
    rep = validate_packing(g, Packing(4, [_tri(0, 1, 2), _tri(1, 2, 3)]))
    assert not rep.valid
    assert "WitnessOverlap" in rep.reasons


def test_packing_json_roundtrip():
    p = Packing(6, [_tri(0, 1, 2), _tri(3, 4, 5)], {"rounds": 1})
    text = dump_packing(p, C3)
    again = load_packing(text)
    assert dump_packing(again, C3) == text
    assert validate_packing(_two_triangles(), again).valid
    assert json.loads(text)["n"] == 6


def test_witness_dict_roundtrip():
    w = _tri(3, 4, 5)
    assert witness_from_dict(json.loads(json.dumps(witness_to_dict(w)))) == w


def test_edge_list_roundtrip(tmp_path):
    g = gen_named("petersen")
    path = tmp_path / "g.txt"
    path.write_text(format_edge_list(g))
    assert read_edge_list(path) == g


@pytest.mark.parametrize(
    "text,line",
    [("3 2\n0 1\n1 x\n", 3), ("3 2\n0 1\n", None), ("abc\n", 1), ("3 1\n0 0\n", 2)],
)
def test_malformed_edge_list_names_file(tmp_path, text, line):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(GraphFormatError) as info:
        read_edge_list(path)
    assert "bad.txt" in str(info.value)
    if line is not None:
        assert f"bad.txt:{line}:" in str(info.value)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12).flatmap(lambda n: st.tuples(st.just(n), st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] != e[1])))))
def test_build_graph_degree_sum(data):
    n, pairs = data
    edges = {(min(a, b), max(a, b)) for a, b in pairs}
    g = build_graph(n, sorted(edges))
    assert int(np.sum(g.degrees)) == 2 * len(edges)
    assert g.edges == frozenset(edges)
