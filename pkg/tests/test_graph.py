"""Graph construction and the structural metric suite against oracles."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from linkgraph import (
    build_graph,
    complexity_metrics,
    connected_components,
    degree_assortativity,
    is_star,
    is_tree,
    load_taxonomy,
    make_graph,
    metrics_report,
    shape_metrics,
    transitivity,
)
from linkgraph.errors import UndefinedValueError, ValidationError
from linkgraph.graph import count_triangles, count_triads, parse_slice

import oracles
from conftest import issue, link, load_clean, repo_doc

TAXONOMY = load_taxonomy()


def labeled(edges):
    vertices = sorted({v for e in edges for v in e})
    return make_graph(vertices, edges)


def star(m: int):
    return make_graph([f"v{i}" for i in range(m + 1)],
                      [("v0", f"v{i}") for i in range(1, m + 1)])


def random_graph(n: int, p: float, seed: int):
    rng = random.Random(seed)
    vertices = [f"n{i}" for i in range(n)]
    edges = [
        (vertices[i], vertices[j])
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < p
    ]
    return make_graph(vertices, edges)


# ------------------------------------------------------------ construction


def test_build_graph_all_slice(tmp_path, six_issue_doc):
    repo = load_clean(tmp_path, six_issue_doc)
    g = build_graph(repo, TAXONOMY, "all")
    assert len(g.edges) == 4
    assert g.vertices == frozenset(repo.issues)


def test_build_graph_category_slice(tmp_path):
    doc = repo_doc("slice", [issue(f"P-{i}") for i in range(8)], [
        link("P-0", "P-1", "Duplicate"),
        link("P-2", "P-3", "Duplicate"),
        link("P-4", "P-5", "Relates"),
        link("P-6", "P-7", "Relates"),
    ])
    repo = load_clean(tmp_path, doc)
    g = build_graph(repo, TAXONOMY, "category:Duplication")
    assert len(g.edges) == 2
    assert len(g.vertices) == 8


def test_build_graph_empty_type_slice(tmp_path):
    doc = repo_doc("blocks", [issue("P-0"), issue("P-1")], [link("P-0", "P-1", "Blocks")])
    repo = load_clean(tmp_path, doc)
    g = build_graph(repo, TAXONOMY, "type:Depends")
    assert len(g.edges) == 0
    report = metrics_report(g)
    assert report.pct_isolated == 1.0


def test_unknown_slice_rejected():
    with pytest.raises(ValidationError):
        parse_slice("flavor:Blue")


# ------------------------------------------------------------- components


def test_components_forced_partition():
    g = make_graph(["A", "B", "C", "D"], [("A", "B"), ("B", "C")])
    comps = connected_components(g)
    assert [c.vertices for c in comps] == [("A", "B", "C"), ("D",)]


def test_components_empty_graph():
    assert connected_components(make_graph([], [])) == []


def test_components_complete_k4():
    vs = ["a", "b", "c", "d"]
    g = make_graph(vs, [(u, v) for i, u in enumerate(vs) for v in vs[i + 1:]])
    comps = connected_components(g)
    assert len(comps) == 1
    assert comps[0].edge_count == 6


def test_component_order_deterministic():
    g = make_graph(["z", "y", "b", "a", "m"], [("z", "y"), ("b", "a")])
    comps = connected_components(g)
    # two 2-vertex components tie on size: ordered by smallest member key
    assert [c.vertices for c in comps] == [("a", "b"), ("y", "z"), ("m",)]


# ------------------------------------------------------------- complexity


def test_complexity_ten_vertices_one_edge():
    g = make_graph([f"v{i}" for i in range(10)], [("v0", "v1")])
    pct_isolated, pct_2comp, pct_3comp_plus, avg_density = complexity_metrics(g)
    assert pct_isolated == pytest.approx(0.8)
    assert pct_2comp == 1.0
    assert pct_3comp_plus == 0.0
    assert avg_density is None


def test_complexity_path_of_three():
    g = labeled([("a", "b"), ("b", "c")])
    *_, avg_density = complexity_metrics(g)
    assert avg_density == pytest.approx(2 / 3)


def test_complexity_partition_invariant():
    g = make_graph(["a", "b", "c", "d", "e", "f"],
                   [("a", "b"), ("c", "d"), ("d", "e")])
    _, pct_2comp, pct_3comp_plus, _ = complexity_metrics(g)
    assert pct_2comp + pct_3comp_plus == 1.0


# ------------------------------------------------------------------ shape


def test_path_of_three_is_tree_and_star():
    comp = connected_components(labeled([("a", "b"), ("b", "c")]))[0]
    assert is_tree(comp) and is_star(comp)


def test_triangle_is_neither():
    comp = connected_components(labeled([("a", "b"), ("b", "c"), ("a", "c")]))[0]
    assert not is_tree(comp) and not is_star(comp)


def test_k14_is_tree_and_star():
    comp = connected_components(star(4))[0]
    assert is_tree(comp) and is_star(comp)


def test_shape_requires_three_vertices():
    comp = connected_components(labeled([("a", "b")]))[0]
    with pytest.raises(ValidationError):
        is_tree(comp)


def test_shape_metrics_mixed():
    g = make_graph(
        ["s0", "s1", "s2", "s3", "s4", "t0", "t1", "t2"],
        [("s0", "s1"), ("s0", "s2"), ("s0", "s3"), ("s0", "s4"),
         ("t0", "t1"), ("t1", "t2"), ("t0", "t2")],
    )
    pct_trees, pct_stars = shape_metrics(g)
    assert pct_trees == 0.5
    assert pct_stars == 0.5


def test_shape_metrics_all_trees():
    g = make_graph(["a", "b", "c", "x", "y", "z"],
                   [("a", "b"), ("b", "c"), ("x", "y"), ("y", "z")])
    pct_trees, _ = shape_metrics(g)
    assert pct_trees == 1.0


def test_shape_metrics_undefined_without_large_components():
    g = labeled([("a", "b")])
    assert shape_metrics(g) == (None, None)


def test_shape_exhaustive_small_graphs():
    # all connected graphs on 3..5 vertices against the DFS oracle
    for n in (3, 4, 5):
        for edges in oracles.connected_graphs(n):
            g = make_graph(range(n), edges)
            comp = connected_components(g)[0]
            vertices = [str(v) for v in range(n)]
            oracle_edges = {(str(a), str(b)) for a, b in edges}
            assert is_tree(comp) == oracles.dfs_acyclic(vertices, oracle_edges)
            if is_star(comp):
                assert is_tree(comp)
                assert oracles.star_by_definition(vertices, oracle_edges)


# ---------------------------------------------------------- assortativity


@pytest.mark.parametrize("m", range(3, 10))
def test_star_assortativity_is_minus_one(m):
    g = star(m)
    value = degree_assortativity(g)
    assert value == pytest.approx(-1.0, abs=1e-9)
    oracle = oracles.pearson_assortativity(sorted(g.vertices), g.edges)
    assert value == pytest.approx(oracle, abs=1e-12)


def test_regular_graphs_are_undefined():
    triangle = labeled([("a", "b"), ("b", "c"), ("a", "c")])
    assert degree_assortativity(triangle) is None
    cycle = labeled([("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")])
    assert degree_assortativity(cycle) is None
    k4 = make_graph("abcd", [(u, v) for i, u in enumerate("abcd") for v in "abcd"[i + 1:]])
    assert degree_assortativity(k4) is None


def test_zero_edges_is_an_error():
    with pytest.raises(UndefinedValueError):
        degree_assortativity(make_graph(["a", "b"], []))


def test_assortativity_matches_oracle_on_random_graphs():
    for seed in range(40):
        g = random_graph(3 + seed % 16, [0.2, 0.4, 0.7][seed % 3], seed)
        if not g.edges:
            continue
        ours = degree_assortativity(g)
        oracle = oracles.pearson_assortativity(sorted(g.vertices), g.edges)
        if ours is None:
            assert oracle is None
        else:
            assert -1.0 <= ours <= 1.0
            assert ours == pytest.approx(oracle, abs=1e-12)


# ----------------------------------------------------------- transitivity


def test_triangle_transitivity():
    assert transitivity(labeled([("a", "b"), ("b", "c"), ("a", "c")])) == 1.0


def test_path_transitivity():
    assert transitivity(labeled([("a", "b"), ("b", "c")])) == 0.0


def test_triangle_with_pendant():
    g = labeled([("a", "b"), ("b", "c"), ("a", "c"), ("b", "d")])
    # brute force: 1 triangle, triads C(2,2)+C(3,2)+C(2,2)+C(1,2) = 5
    assert count_triangles(g) == 1
    assert count_triads(g) == 5
    assert transitivity(g) == pytest.approx(0.6)
    assert transitivity(g) == pytest.approx(
        oracles.brute_force_transitivity(sorted(g.vertices), g.edges), abs=1e-12
    )


def test_transitivity_matches_brute_force_on_random_graphs():
    for seed in range(30):
        g = random_graph(4 + seed % 20, [0.15, 0.35, 0.6][seed % 3], seed * 7 + 1)
        oracle = oracles.brute_force_transitivity(sorted(g.vertices), g.edges)
        assert abs(transitivity(g) - oracle) < 1e-12


# ----------------------------------------------------------------- report


def test_report_empty_graph():
    report = metrics_report(make_graph(["a", "b"], []))
    assert report.pct_isolated == 1.0
    assert report.transitivity == 0.0
    assert report.avg_density is None
    assert report.assortativity is None
    assert report.pct_trees is None


def test_report_no_vertices():
    report = metrics_report(make_graph([], []))
    assert report.pct_isolated is None
    assert report.transitivity == 0.0


def test_report_serializes_none_as_null():
    import json

    doc = json.dumps(metrics_report(make_graph(["a"], [])).to_dict())
    assert '"avg_density": null' in doc


def test_isolated_vertex_changes_only_pct_isolated():
    g = labeled([("a", "b"), ("b", "c"), ("a", "c"), ("c", "d")])
    before = metrics_report(g)
    bigger = make_graph(set(g.vertices) | {"lonely"}, g.edges)
    after = metrics_report(bigger)
    assert after.pct_isolated != before.pct_isolated
    for field in ("pct_2comp", "pct_3comp_plus", "avg_density", "pct_trees",
                  "pct_stars", "assortativity", "transitivity"):
        assert getattr(after, field) == getattr(before, field)


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=0, max_value=2**32), st.integers(min_value=4, max_value=14))
def test_relabeling_invariance(seed, n):
    g = random_graph(n, 0.4, seed)
    rng = random.Random(seed + 1)
    names = [f"relabeled-{i}" for i in range(n)]
    rng.shuffle(names)
    mapping = dict(zip(sorted(g.vertices), names))
    h = make_graph(
        [mapping[v] for v in g.vertices],
        [(mapping[a], mapping[b]) for a, b in g.edges],
    )
    assert transitivity(g) == pytest.approx(transitivity(h), abs=1e-12)
    if g.edges:
        ga = degree_assortativity(g)
        ha = degree_assortativity(h)
        assert (ga is None) == (ha is None)
        if ga is not None:
            assert ga == pytest.approx(ha, abs=1e-12)


def test_density_in_unit_interval():
    for seed in range(10):
        g = random_graph(8, 0.5, seed + 100)
        for comp in connected_components(g):
            if comp.size >= 2:
                assert 0 < comp.density() <= 1
