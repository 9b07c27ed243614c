"""Layout pipeline: cycle removal, layering, crossings, coordinates.

Oracles are kept deliberately independent of the implementation: a
graphlib topological sort for acyclicity, an O(E^2) pairwise scan for
crossing counts, and exhaustive permutation search (small sides) for
the two-layer optimum.
"""

import graphlib
import itertools
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import dreams
from dreams import Direction, LayoutConfig, ModelKind, NodeKind, Polarity
from dreams.layout import (
    ProperGraph,
    assign_coordinates,
    assign_layers,
    count_crossings,
    insert_dummies,
    is_dummy,
    minimize_crossings,
    oriented_edges,
    remove_cycles,
)

from generators import random_digraph, random_layered_graph, random_model


def brute_force_crossings(proper: ProperGraph, orders) -> int:
    """O(E^2) pairwise inversion scan, the textbook definition."""
    pos = {}
    for layer_nodes in orders:
        for i, n in enumerate(layer_nodes):
            pos[n] = i
    total = 0
    segs = [(proper.layer_of[u], pos[u], pos[v]) for u, v, _ in proper.segments]
    for (la, ua, va), (lb, ub, vb) in itertools.combinations(segs, 2):
        if la == lb and (ua - ub) * (va - vb) < 0:
            total += 1
    return total


def check_acyclic_with_graphlib(nodes, pairs) -> None:
    sorter = graphlib.TopologicalSorter({n: set() for n in nodes})
    for s, t in pairs:
        sorter.add(t, s)
    sorter.prepare()  # raises CycleError if cyclic


def chain_model(labels):
    m = dreams.create_model(ModelKind.REFERENCE_MODEL, "chain")
    ids = [dreams.add_node(m, NodeKind.INFLUENCING_FACTOR, x) for x in labels]
    for s, t in zip(ids, ids[1:]):
        dreams.add_link(m, s, t, Polarity.POSITIVE)
    return m, ids


# --- remove_cycles ------------------------------------------------------


def test_remove_cycles_acyclic_chain():
    edges = [("e1", "a", "b"), ("e2", "b", "c")]
    assert remove_cycles(["a", "b", "c"], edges) == set()


def test_remove_cycles_two_cycle_reverses_exactly_one():
    edges = [("e1", "a", "b"), ("e2", "b", "a")]
    reversed_ids = remove_cycles(["a", "b"], edges)
    assert len(reversed_ids) == 1
    assert reversed_ids < {"e1", "e2"}


def test_remove_cycles_random_digraphs_acyclic_by_toposort():
    rng = random.Random(2024)
    for _ in range(300):
        nodes, edges = random_digraph(rng, max_nodes=8)
        reversed_ids = remove_cycles(nodes, edges)
        check_acyclic_with_graphlib(nodes, oriented_edges(edges, reversed_ids))


def test_remove_cycles_is_deterministic():
    rng = random.Random(5)
    nodes, edges = random_digraph(rng, max_nodes=20)
    first = remove_cycles(nodes, edges)
    for _ in range(5):
        assert remove_cycles(list(nodes), list(edges)) == first


# --- assign_layers ------------------------------------------------------


def test_assign_layers_chain():
    layers = assign_layers(["a", "b", "c"], [("a", "b"), ("b", "c")])
    assert layers == {"a": 0, "b": 1, "c": 2}


def test_assign_layers_diamond():
    layers = assign_layers(
        ["a", "b", "c", "d"], [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")]
    )
    assert layers == {"a": 0, "b": 1, "c": 1, "d": 2}


def test_assign_layers_rejects_cycle():
    with pytest.raises(graphlib.CycleError):
        assign_layers(["a", "b"], [("a", "b"), ("b", "a")])


def test_assign_layers_random_dags_edges_increase():
    rng = random.Random(77)
    for _ in range(200):
        nodes, edges = random_digraph(rng, max_nodes=15)
        reversed_ids = remove_cycles(nodes, edges)
        pairs = oriented_edges(edges, reversed_ids)
        layers = assign_layers(nodes, pairs)
        assert min(layers.values()) == 0
        for s, t in pairs:
            assert layers[t] >= layers[s] + 1


def test_assign_layers_is_longest_path():
    # two routes to d: direct and through b, c; longest wins
    layers = assign_layers(
        ["a", "b", "c", "d"], [("a", "d"), ("a", "b"), ("b", "c"), ("c", "d")]
    )
    assert layers["d"] == 3


# --- insert_dummies -----------------------------------------------------


def test_insert_dummies_span_three_makes_two_dummies():
    layer = {"a": 0, "b": 3}
    proper = insert_dummies(["a", "b"], [("e1", "a", "b")], set(), layer)
    chain = proper.chains["e1"]
    assert chain[0] == "a" and chain[-1] == "b"
    assert [is_dummy(n) for n in chain] == [False, True, True, False]
    assert [proper.layer_of[n] for n in chain] == [0, 1, 2, 3]


def test_insert_dummies_proper_graph_unchanged():
    nodes, edges, layer_of = random_layered_graph(random.Random(3))
    proper = insert_dummies(nodes, edges, set(), layer_of)
    assert proper.real_ids == set(nodes)
    assert all(not is_dummy(n) for n in proper.base_order)
    for u, v, _ in proper.segments:
        assert proper.layer_of[v] == proper.layer_of[u] + 1


def test_insert_dummies_chains_reconstruct_links():
    rng = random.Random(9)
    for _ in range(50):
        nodes, edges = random_digraph(rng, max_nodes=12)
        reversed_ids = remove_cycles(nodes, edges)
        layers = assign_layers(nodes, oriented_edges(edges, reversed_ids))
        proper = insert_dummies(nodes, edges, reversed_ids, layers)
        assert set(proper.chains) == {link_id for link_id, _, _ in edges}
        for link_id, s, t in edges:
            chain = proper.chains[link_id]
            expected = (t, s) if link_id in reversed_ids else (s, t)
            assert (chain[0], chain[-1]) == expected
            assert all(is_dummy(n) for n in chain[1:-1])
            # every segment spans exactly one layer
            for a, b in zip(chain, chain[1:]):
                assert proper.layer_of[b] == proper.layer_of[a] + 1


# --- count_crossings ----------------------------------------------------


def test_count_crossings_no_edges():
    proper = insert_dummies(["a", "b"], [], set(), {"a": 0, "b": 1})
    assert count_crossings(proper, [["a"], ["b"]]) == 0


def k22_proper():
    layer = {"u1": 0, "u2": 0, "v1": 1, "v2": 1}
    edges = [
        ("e1", "u1", "v1"),
        ("e2", "u1", "v2"),
        ("e3", "u2", "v1"),
        ("e4", "u2", "v2"),
    ]
    return insert_dummies(list(layer), edges, set(), layer)


def test_count_crossings_k22_is_one_in_any_order():
    proper = k22_proper()
    for us in itertools.permutations(["u1", "u2"]):
        for vs in itertools.permutations(["v1", "v2"]):
            assert count_crossings(proper, [list(us), list(vs)]) == 1


def test_count_crossings_shared_endpoint_is_not_a_crossing():
    layer = {"u1": 0, "v1": 1, "v2": 1}
    edges = [("e1", "u1", "v1"), ("e2", "u1", "v2")]
    proper = insert_dummies(list(layer), edges, set(), layer)
    assert count_crossings(proper, [["u1"], ["v1", "v2"]]) == 0


def test_count_crossings_matches_brute_force():
    rng = random.Random(41)
    for _ in range(200):
        nodes, edges, layer_of = random_layered_graph(rng, max_nodes=20, max_edges=40)
        proper = insert_dummies(nodes, edges, set(), layer_of)
        orders = proper.nodes_by_layer()
        for layer_nodes in orders:
            rng.shuffle(layer_nodes)
        assert count_crossings(proper, orders) == brute_force_crossings(proper, orders)


# --- minimize_crossings -------------------------------------------------


def test_minimize_resolves_single_inversion():
    layer = {"u1": 0, "u2": 0, "v1": 1, "v2": 1}
    edges = [("e1", "u1", "v2"), ("e2", "u2", "v1")]
    proper = insert_dummies(list(layer), edges, set(), layer)
    final = minimize_crossings(proper, [["u1", "u2"], ["v1", "v2"]])
    assert count_crossings(proper, final) == 0


def test_minimize_k22_stays_at_one():
    proper = k22_proper()
    final = minimize_crossings(proper, [["u1", "u2"], ["v1", "v2"]])
    assert count_crossings(proper, final) == 1


def test_minimize_never_worse_than_initial():
    rng = random.Random(13)
    for _ in range(150):
        nodes, edges, layer_of = random_layered_graph(rng, max_nodes=16, max_edges=30)
        proper = insert_dummies(nodes, edges, set(), layer_of)
        initial = proper.nodes_by_layer()
        for layer_nodes in initial:
            rng.shuffle(layer_nodes)
        final = minimize_crossings(proper, initial)
        assert count_crossings(proper, final) <= count_crossings(proper, initial)
        for before, after in zip(initial, final):
            assert sorted(before) == sorted(after)


# --- assign_coordinates -------------------------------------------------


def test_coordinates_single_node_at_origin():
    positions = assign_coordinates([["a"]], LayoutConfig())
    assert positions == {"a": (0.0, 0.0)}


def test_coordinates_three_nodes_centered():
    cfg = LayoutConfig(node_gap=50.0)
    positions = assign_coordinates([["a", "b", "c"]], cfg)
    xs = [positions[n][0] for n in ("a", "b", "c")]
    assert xs == [-50.0, 0.0, 50.0]
    assert all(positions[n][1] == 0.0 for n in ("a", "b", "c"))


def test_coordinates_left_right_swaps_axes():
    cfg = LayoutConfig(direction=Direction.LEFT_RIGHT)
    positions = assign_coordinates([["a"], ["b"]], cfg)
    assert positions["a"] == (0.0, 0.0)
    assert positions["b"] == (cfg.layer_gap, 0.0)


def test_coordinates_respect_node_gap():
    rng = random.Random(23)
    cfg = LayoutConfig(node_gap=17.0, layer_gap=31.0)
    for _ in range(50):
        nodes, edges, layer_of = random_layered_graph(rng)
        proper = insert_dummies(nodes, edges, set(), layer_of)
        orders = proper.nodes_by_layer()
        positions = assign_coordinates(orders, cfg)
        for layer_nodes in orders:
            xs = sorted(positions[n][0] for n in layer_nodes)
            for a, b in zip(xs, xs[1:]):
                assert b - a >= cfg.node_gap - 1e-9
        assert len(set(positions.values())) == len(positions)


def test_layout_config_validation():
    with pytest.raises(ValueError):
        LayoutConfig(layer_gap=0)
    with pytest.raises(ValueError):
        LayoutConfig(max_sweeps=0)


# --- layout (full pipeline) ---------------------------------------------


def test_layout_empty_model():
    m = dreams.create_model(ModelKind.REFERENCE_MODEL, "empty")
    lay = dreams.layout(m)
    assert lay.layer_of == {} and lay.routes == {}
    assert lay.crossing_count == 0


def test_layout_deterministic_bytes():
    m = random_model(random.Random(99), max_nodes=15, max_links=25)
    blobs = {
        json.dumps(dreams.layout(m).to_dict(), sort_keys=True).encode() for _ in range(10)
    }
    assert len(blobs) == 1


def test_layout_edge_direction_invariant():
    rng = random.Random(31)
    for _ in range(50):
        m = random_model(rng, max_nodes=12, max_links=24)
        lay = dreams.layout(m)
        for link in m.links:
            if link.id in lay.reversed_links:
                assert lay.layer_of[link.source] > lay.layer_of[link.target]
            else:
                assert lay.layer_of[link.target] > lay.layer_of[link.source]


def test_layout_orders_form_permutations():
    m = random_model(random.Random(17), max_nodes=14, max_links=28)
    lay = dreams.layout(m)
    by_layer = {}
    for n, li in lay.layer_of.items():
        by_layer.setdefault(li, []).append(n)
    for members in by_layer.values():
        ranks = sorted(lay.order_of[n] for n in members)
        assert ranks == list(range(len(members)))


def test_layout_routes_follow_dummy_positions_and_direction():
    m, ids_ = chain_model(["a", "b", "c", "d"])
    # long link a->d spans three layers: the route must bend twice
    dreams.add_link(m, ids_[0], ids_[3], Polarity.NEGATIVE)
    lay = dreams.layout(m)
    long_id = m.links[-1].id
    route = lay.routes[long_id]
    assert len(route) == 4
    assert route[0] == lay.position_of[ids_[0]]
    assert route[-1] == lay.position_of[ids_[3]]
    ys = [p[1] for p in route]
    assert ys == sorted(ys)


def test_layout_reversed_route_still_runs_source_to_target():
    m, ids_ = chain_model(["a", "b", "c"])
    dreams.add_link(m, ids_[2], ids_[0], Polarity.POSITIVE)  # closes a cycle
    lay = dreams.layout(m)
    back_id = m.links[-1].id
    assert back_id in lay.reversed_links
    route = lay.routes[back_id]
    assert route[0] == lay.position_of[ids_[2]]
    assert route[-1] == lay.position_of[ids_[0]]


def test_layout_crossing_count_consistent_with_brute_force():
    rng = random.Random(53)
    for _ in range(60):
        m = random_model(rng, max_nodes=12, max_links=24)
        lay = dreams.layout(m)
        nodes = [n.id for n in m.nodes]
        edges = [(l.id, l.source, l.target) for l in m.links]
        proper = insert_dummies(nodes, edges, lay.reversed_links, lay.layer_of)
        orders = [
            [n for n in proper.base_order if proper.layer_of[n] == li]
            for li in range(proper.layer_count)
        ]
        # reconstruct the final ordering from coordinates
        positions = {}
        for link in m.links:
            chain = proper.chains[link.id]
            pts = lay.routes[link.id]
            if link.id in lay.reversed_links:
                pts = pts[::-1]
            positions.update(zip(chain, pts))
        positions.update(lay.position_of)
        for row in orders:
            row.sort(key=lambda n: positions[n][0])
        assert lay.crossing_count == brute_force_crossings(proper, orders)


def test_layout_round_trip_dict():
    m = random_model(random.Random(4), max_nodes=10, max_links=16)
    lay = dreams.layout(m)
    again = dreams.LayeredLayout.from_dict(lay.to_dict())
    assert again == lay


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_layout_invariants_on_random_models(seed):
    m = random_model(random.Random(seed), max_nodes=12, max_links=20)
    lay = dreams.layout(m)
    assert set(lay.layer_of) == {n.id for n in m.nodes}
    assert set(lay.routes) == {l.id for l in m.links}
    assert lay.crossing_count >= 0
    assert len(set(lay.position_of.values())) == len(lay.position_of)
    for link in m.links:
        route = lay.routes[link.id]
        assert route[0] == lay.position_of[link.source]
        assert route[-1] == lay.position_of[link.target]


# --- incremental stability ----------------------------------------------


def test_previous_layout_seeding_preserves_untouched_order():
    m = random_model(random.Random(6), max_nodes=20, max_links=30)
    first = dreams.layout(m)
    second = dreams.layout(m, previous_layout=first)
    assert second.to_dict() == first.to_dict()


def test_leaf_insertion_keeps_most_relative_orders():
    rng = random.Random(8)
    m = random_model(rng, max_nodes=20, max_links=30)
    if not m.nodes:
        pytest.skip("degenerate draw")
    before = dreams.layout(m)
    anchor = rng.choice(m.nodes).id
    leaf = dreams.add_node(m, NodeKind.INFLUENCING_FACTOR, "leaf")
    dreams.add_link(m, anchor, leaf, Polarity.POSITIVE)
    after = dreams.layout(m, previous_layout=before)
    churn = dreams.layout_stability(before, after)
    assert 0.0 <= churn <= 1.0
