from itertools import combinations
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viewfuse.community import (
    binomial_tail,
    detect_communities,
    node_significance,
    resolution_sweep,
)
from viewfuse.errors import ConfigError, DataError
from viewfuse.synth import SynthSpec, generate_multiview, overlapping_nmi
from viewfuse.views import build_views
from viewfuse.fusion import build_unified_graph

from conftest import clique_pair_graph, graph_from_edges


def exact_tail(k_in, k, q):
    # independent oracle: direct binomial summation
    if k_in <= 0:
        return 1.0
    return sum(comb(k, i) * q**i * (1 - q) ** (k - i) for i in range(k_in, k + 1))


def test_tail_worked_example():
    # 3 trials, 2 successes, q=0.2: 3*(0.04)(0.8) + 0.008 = 0.104
    assert abs(binomial_tail(2, 3, 0.2) - 0.104) < 1e-12


@settings(max_examples=200, deadline=None)
@given(
    st.integers(0, 30),
    st.integers(0, 30),
    st.floats(0.0, 1.0, allow_nan=False),
)
def test_tail_matches_sum_oracle(k_in, k, q):
    assert abs(binomial_tail(k_in, k, q) - exact_tail(k_in, k, q)) < 1e-9


# -- node significance --------------------------------------------------------


def test_all_links_in_is_minimal():
    graph, a, _ = clique_pair_graph(10)
    community = sorted(a)[:5]
    node = sorted(a)[5]
    # node has degree 9, five links into the 5-member community
    p = node_significance(graph, community, node)
    two_m = 2 * (2 * 45 + 1)
    s_c = 5 * 9 + (1 if "a0" in community else 0)
    assert abs(p - exact_tail(5, 9, s_c / two_m)) < 1e-12


def test_zero_links_gives_one():
    graph, a, b = clique_pair_graph(10)
    p = node_significance(graph, sorted(a - {"a0"})[:4], "b3")
    assert p == 1.0


def test_derived_tail_value_through_graph():
    # triangle community with external node of degree 3, two links in
    nodes = ["c0", "c1", "c2", "x", "y", "z"]
    edges = [("c0", "c1"), ("c1", "c2"), ("c0", "c2"),
             ("x", "c0"), ("x", "c1"), ("x", "y"), ("y", "z")]
    graph = graph_from_edges(nodes, edges)
    p = node_significance(graph, ["c0", "c1", "c2"], "x")
    two_m = 2 * len(edges)
    s_c = 3 + 3 + 2  # degrees of c0, c1, c2
    assert abs(p - exact_tail(2, 3, s_c / two_m)) < 1e-12


def test_empty_community_rejected():
    graph, _, _ = clique_pair_graph(4)
    with pytest.raises(DataError):
        node_significance(graph, [], "a0")


def test_member_node_rejected():
    graph, a, _ = clique_pair_graph(4)
    with pytest.raises(DataError):
        node_significance(graph, sorted(a), "a0")


def test_adding_edge_never_increases_significance():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = 12
        nodes = [f"n{i}" for i in range(n)]
        edges = sorted(
            {(nodes[i], nodes[j]) for i in range(n) for j in range(i + 1, n)
             if rng.random() < 0.25}
        )
        graph = graph_from_edges(nodes, edges)
        community = set(nodes[:4])
        outside = [u for u in nodes[4:]]
        u = outside[int(rng.integers(len(outside)))]
        target = next((c for c in sorted(community)
                       if (u, c) not in edges and (c, u) not in edges), None)
        if target is None:
            continue
        before = node_significance(graph, community, u)
        augmented = graph_from_edges(nodes, edges + [(u, target)])
        after = node_significance(augmented, community, u)
        assert after <= before + 1e-12


# -- detection ----------------------------------------------------------------


def test_two_cliques_exactly_recovered():
    graph, a, b = clique_pair_graph(10)
    for seed in range(5):
        cover = detect_communities(graph, 0.5, seed=seed)
        assert sorted(frozenset(c) for c in cover.communities) == sorted([a, b])


def test_exhaustive_stability_oracle_on_small_twin():
    """Brute-force oracle: over all >=2-node subsets of two 6-cliques, the only
    sets that are both stable (every member re-admissible) and closed (no
    external candidate passes the growth gate) are the cliques themselves,
    and detection returns exactly those. p-values are recomputed here from
    scratch with pure-python binomial sums."""
    graph, a, b = clique_pair_graph(6)
    nodes = sorted(graph.accounts)
    adj = {n: set() for n in nodes}
    for u, v in graph.edges():
        adj[u].add(v)
        adj[v].add(u)
    deg = {n: len(adj[n]) for n in nodes}
    two_m = sum(deg.values())
    threshold = 0.5

    def p_val(community, u):
        s = sum(deg[m] for m in community)
        return exact_tail(len(adj[u] & community), deg[u], s / two_m)

    def externals(community):
        return {x for m in community for x in adj[m]} - community

    def best_corrected(community):
        ext = externals(community)
        if not ext:
            return 1.0
        best = min(p_val(community, x) for x in ext)
        return 1.0 - (1.0 - best) ** len(ext)

    def stable(community):
        for u in community:
            rest = community - {u}
            ext = externals(rest)
            corrected = 1.0 - (1.0 - p_val(rest, u)) ** len(ext) if ext else 0.0
            if corrected >= threshold:
                return False
        return True

    found = [
        frozenset(c)
        for size in range(2, len(nodes) + 1)
        for c in combinations(nodes, size)
        if stable(frozenset(c)) and best_corrected(frozenset(c)) >= threshold
    ]
    assert sorted(found) == sorted([a, b])
    cover = detect_communities(graph, threshold, seed=1)
    assert sorted(frozenset(c) for c in cover.communities) == sorted([a, b])


def test_empty_graph_complete_coverage_gives_singletons():
    graph = graph_from_edges(["x", "y", "z"], [])
    cover = detect_communities(graph, 0.5, seed=0)
    assert cover.communities == (("x",), ("y",), ("z",))
    assert set(cover.assignment) == {"x", "y", "z"}


def test_p_out_of_range_rejected():
    graph = graph_from_edges(["x", "y"], [("x", "y")])
    for bad in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(ConfigError):
            detect_communities(graph, bad)


def test_determinism_byte_for_byte():
    graph, _, _ = clique_pair_graph(8)
    one = detect_communities(graph, 0.6, seed=3)
    two = detect_communities(graph, 0.6, seed=3)
    assert one.canonical_json() == two.canonical_json()


def test_complete_coverage_union_is_node_set(syria_fixture):
    _, _, graph = syria_fixture
    cover = detect_communities(graph, 0.8, seed=0)
    covered = {n for c in cover.communities for n in c}
    assert covered == set(graph.accounts)
    assert all(len(cs) >= 1 for cs in cover.assignment.values())


def test_natural_coverage_can_leave_nodes_out():
    nodes = [f"a{i}" for i in range(5)] + ["lone"]
    edges = [(f"a{i}", f"a{j}") for i in range(5) for j in range(i + 1, 5)]
    graph = graph_from_edges(nodes + ["far"], edges)
    cover = detect_communities(graph, 0.5, seed=0, coverage="natural")
    covered = {n for c in cover.communities for n in c}
    assert "lone" not in covered and "far" not in covered


def test_no_duplicate_communities_and_min_size(syria_fixture):
    _, _, graph = syria_fixture
    cover = detect_communities(graph, 0.8, seed=1)
    as_sets = [frozenset(c) for c in cover.communities]
    assert len(as_sets) == len(set(as_sets))
    isolated = {n for n in graph.accounts
                if not graph.out_edges.get(n) and
                not any(n in vs for vs in graph.out_edges.values())}
    for community in cover.communities:
        assert len(community) >= 2 or set(community) <= isolated or len(community) == 1


def test_planted_blocks_recovered_small():
    spec = SynthSpec(
        n_accounts=80,
        block_sizes=(20, 20, 20, 20),
        intra_p={"follow": 0.3, "mention": 0.2, "retweet": 0.15},
        within_macro_p={"follow": 0.01, "mention": 0.01, "retweet": 0.005},
        cross_p={"follow": 0.01, "mention": 0.01, "retweet": 0.005},
        videos_per_channel=10,
        seed=5,
    )
    corpus, truth = generate_multiview(spec)
    graph = build_unified_graph(corpus, build_views(corpus), 5)
    scores = []
    for seed in range(5):
        cover = detect_communities(graph, 0.8, seed=seed)
        scores.append(overlapping_nmi(cover, truth.cover))
    assert sum(s >= 0.85 for s in scores) >= 4


# -- sweep ---------------------------------------------------------------------


def test_sweep_row_count_and_order():
    graph, _, _ = clique_pair_graph(6)
    report = resolution_sweep(graph, [0.9, 0.1, 0.5], [0])
    assert [r.p_threshold for r in report.rows] == [0.1, 0.5, 0.9]
    report = resolution_sweep(graph, [0.5], [4, 2, 0, 3, 1])
    assert [r.seed for r in report.rows] == [0, 1, 2, 3, 4]
    assert len(report.rows) == 5


def test_sweep_nine_values(syria_fixture):
    _, _, graph = syria_fixture
    p_values = [round(0.1 * i, 1) for i in range(1, 10)]
    report = resolution_sweep(graph, p_values, [0])
    assert len(report.rows) == 9


def test_sweep_rejects_empty_inputs():
    graph, _, _ = clique_pair_graph(4)
    with pytest.raises(ConfigError):
        resolution_sweep(graph, [], [0])
    with pytest.raises(ConfigError):
        resolution_sweep(graph, [0.5], [])
