"""Layered layout for causal model graphs.

The pipeline has four stages: orient cycle-breaking links (greedy
feedback-arc heuristic), assign every node the length of its longest
incoming path as its layer, split multi-layer links with dummy nodes so
every segment spans one layer, then order each layer with barycenter
sweeps that never return a worse ordering than the one they started
from. Coordinates place layers ``layer_gap`` apart and slot nodes
``node_gap`` apart, centered on a shared axis.

Everything here is a pure function of its inputs: re-running a layout on
the same model and config reproduces it exactly. Passing a previous
layout switches the ordering stage to an incremental mode that freezes
surviving nodes in their previous relative order and only chooses slots
for material that was not there before, so edits never reshuffle the
parts of the drawing the user has already learned.
"""

from __future__ import annotations

import graphlib
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .model import ModelDocument

# (link_id, source, target) triples; the unit the stage functions work on.
Edge = tuple[str, str, str]

_DUMMY_PREFIX = "~dummy:"


class Direction(str, Enum):
    TOP_DOWN = "top_down"
    LEFT_RIGHT = "left_right"


@dataclass
class LayoutConfig:
    layer_gap: float = 80.0
    node_gap: float = 40.0
    direction: Direction = Direction.TOP_DOWN
    max_sweeps: int = 8
    deterministic_seed_order: bool = True

    def __post_init__(self) -> None:
        if self.layer_gap <= 0 or self.node_gap <= 0:
            raise ValueError("layer_gap and node_gap must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        self.direction = Direction(self.direction)


@dataclass
class LayeredLayout:
    layer_of: dict[str, int]
    order_of: dict[str, int]
    position_of: dict[str, tuple[float, float]]
    routes: dict[str, list[tuple[float, float]]]
    reversed_links: set[str]
    crossing_count: int

    def to_dict(self) -> dict:
        return {
            "layer_of": dict(self.layer_of),
            "order_of": dict(self.order_of),
            "position_of": {k: [x, y] for k, (x, y) in self.position_of.items()},
            "routes": {k: [[x, y] for x, y in pts] for k, pts in self.routes.items()},
            "reversed_links": sorted(self.reversed_links),
            "crossing_count": self.crossing_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LayeredLayout":
        return cls(
            layer_of={k: int(v) for k, v in data["layer_of"].items()},
            order_of={k: int(v) for k, v in data["order_of"].items()},
            position_of={k: (float(v[0]), float(v[1])) for k, v in data["position_of"].items()},
            routes={k: [(float(x), float(y)) for x, y in pts] for k, pts in data["routes"].items()},
            reversed_links=set(data["reversed_links"]),
            crossing_count=int(data["crossing_count"]),
        )


def remove_cycles(nodes: Sequence[str], edges: Sequence[Edge]) -> set[str]:
    """Pick links to draw against their stored direction so the rest is acyclic.

    Greedy sink/source peeling with a max out-minus-in fallback; ties go
    to the lexicographically smallest id, so the result is deterministic.
    """
    succ: dict[str, set[str]] = defaultdict(set)
    pred: dict[str, set[str]] = defaultdict(set)
    for _, s, t in edges:
        succ[s].add(t)
        pred[t].add(s)

    active = set(nodes)
    outd = {n: len(succ[n] & active) for n in nodes}
    ind = {n: len(pred[n] & active) for n in nodes}

    head: list[str] = []
    tail: list[str] = []

    def drop(n: str) -> None:
        active.discard(n)
        for p in pred[n]:
            if p in active:
                outd[p] -= 1
        for q in succ[n]:
            if q in active:
                ind[q] -= 1

    while active:
        sinks = sorted(n for n in active if outd[n] == 0)
        while sinks:
            for n in sinks:
                drop(n)
                tail.append(n)
            sinks = sorted(n for n in active if outd[n] == 0)
        sources = sorted(n for n in active if ind[n] == 0 and outd[n] > 0)
        while sources:
            for n in sources:
                drop(n)
                head.append(n)
            sources = sorted(n for n in active if ind[n] == 0 and outd[n] > 0)
        if active:
            best = min(active, key=lambda n: (ind[n] - outd[n], n))
            drop(best)
            head.append(best)

    sequence = head + tail[::-1]
    pos = {n: i for i, n in enumerate(sequence)}
    return {link_id for link_id, s, t in edges if pos[s] > pos[t]}


def oriented_edges(edges: Iterable[Edge], reversed_links: set[str]) -> list[tuple[str, str]]:
    """Edge pairs in drawing direction: reversed links flow target-to-source."""
    return [(t, s) if link_id in reversed_links else (s, t) for link_id, s, t in edges]


def assign_layers(nodes: Sequence[str], edges: Iterable[tuple[str, str]]) -> dict[str, int]:
    """Longest-path layering: layer(v) = longest path from any source to v.

    Raises graphlib.CycleError if the input still contains a cycle.
    """
    pairs = set(edges)
    preds: dict[str, list[str]] = defaultdict(list)
    indeg = {n: 0 for n in nodes}
    succs: dict[str, list[str]] = defaultdict(list)
    for s, t in pairs:
        preds[t].append(s)
        succs[s].append(t)
        indeg[t] += 1

    layer = {n: 0 for n in nodes}
    ready = sorted(n for n in nodes if indeg[n] == 0)
    seen = 0
    while ready:
        n = ready.pop()
        seen += 1
        for m in sorted(succs[n]):
            layer[m] = max(layer[m], layer[n] + 1)
            indeg[m] -= 1
            if indeg[m] == 0:
                ready.append(m)
    if seen != len(nodes):
        raise graphlib.CycleError("input graph is not acyclic", sorted(n for n in nodes if indeg[n] > 0))
    return layer


@dataclass
class ProperGraph:
    """A layered graph in which every segment spans exactly one layer."""

    layer_of: dict[str, int]
    layer_count: int
    chains: dict[str, list[str]]  # link id -> node chain in drawing direction
    segments: list[tuple[str, str, str]]  # (upper node, lower node, link id)
    real_ids: set[str]
    base_order: list[str]  # all node ids in insertion order

    def nodes_by_layer(self) -> list[list[str]]:
        layers: list[list[str]] = [[] for _ in range(self.layer_count)]
        for n in self.base_order:
            layers[self.layer_of[n]].append(n)
        return layers


def insert_dummies(
    nodes: Sequence[str],
    edges: Sequence[Edge],
    reversed_links: set[str],
    layer: dict[str, int],
) -> ProperGraph:
    """Split every link spanning k>1 layers into a chain with k-1 dummy nodes."""
    layer_of = dict(layer)
    base_order = list(nodes)
    chains: dict[str, list[str]] = {}
    segments: list[tuple[str, str, str]] = []

    for link_id, s, t in edges:
        u, v = (t, s) if link_id in reversed_links else (s, t)
        span = layer_of[v] - layer_of[u]
        chain = [u]
        for i in range(span - 1):
            d = f"{_DUMMY_PREFIX}{link_id}:{i}"
            layer_of[d] = layer_of[u] + 1 + i
            base_order.append(d)
            chain.append(d)
        chain.append(v)
        chains[link_id] = chain
        for a, b in zip(chain, chain[1:]):
            segments.append((a, b, link_id))

    layer_count = max(layer_of.values(), default=-1) + 1
    return ProperGraph(
        layer_of=layer_of,
        layer_count=layer_count,
        chains=chains,
        segments=segments,
        real_ids=set(nodes),
        base_order=base_order,
    )


def is_dummy(node_id: str) -> bool:
    return node_id.startswith(_DUMMY_PREFIX)


def count_crossings(proper: ProperGraph, orders: Sequence[Sequence[str]]) -> int:
    """Exact crossing count: inter-layer endpoint inversions, summed per layer pair."""
    pos: dict[str, int] = {}
    for layer_nodes in orders:
        for i, n in enumerate(layer_nodes):
            pos[n] = i

    by_layer: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for u, v, _ in proper.segments:
        by_layer[proper.layer_of[u]].append((pos[u], pos[v]))

    total = 0
    for seg in by_layer.values():
        seg.sort()
        total += _count_inversions([v for _, v in seg])
    return total


def _count_inversions(values: list[int]) -> int:
    """Pairs (i, j) with i < j and values[i] > values[j], by merge sort."""
    if len(values) < 2:
        return 0

    def merge_count(a: list[int]) -> tuple[int, list[int]]:
        if len(a) < 2:
            return 0, a
        mid = len(a) // 2
        left_inv, left = merge_count(a[:mid])
        right_inv, right = merge_count(a[mid:])
        merged: list[int] = []
        inv = left_inv + right_inv
        i = j = 0
        while i < len(left) and j < len(right):
            if right[j] < left[i]:
                inv += len(left) - i
                merged.append(right[j])
                j += 1
            else:
                merged.append(left[i])
                i += 1
        merged.extend(left[i:])
        merged.extend(right[j:])
        return inv, merged

    return merge_count(values)[0]


def minimize_crossings(
    proper: ProperGraph,
    initial_orders: Sequence[Sequence[str]],
    max_sweeps: int = 8,
) -> list[list[str]]:
    """Barycenter down-up sweeps followed by an adjacent-exchange polish.

    Returns the best ordering encountered, never worse than the initial
    one. The sweeps stop after max_sweeps rounds or as soon as a round
    brings no strict improvement; the polish then alternates strict
    exchange passes with passes that also take crossing-neutral swaps,
    which lets it walk off the plateaus the barycenter parks on.
    """
    above: dict[str, list[str]] = defaultdict(list)
    below: dict[str, list[str]] = defaultdict(list)
    for u, v, _ in proper.segments:
        above[v].append(u)
        below[u].append(v)

    current = [list(layer_nodes) for layer_nodes in initial_orders]
    best = [list(layer_nodes) for layer_nodes in current]
    best_count = count_crossings(proper, current)

    for _ in range(max_sweeps):
        for li in range(1, len(current)):
            _reorder(current, li, above)
        for li in range(len(current) - 2, -1, -1):
            _reorder(current, li, below)
        c = count_crossings(proper, current)
        if c < best_count:
            best_count = c
            best = [list(layer_nodes) for layer_nodes in current]
        else:
            break

    current = [list(layer_nodes) for layer_nodes in best]
    pos: dict[str, int] = {}
    for layer_nodes in current:
        for i, n in enumerate(layer_nodes):
            pos[n] = i
    quiet_strict = False
    for round_index in range(max_sweeps):
        allow_equal = bool(round_index % 2)
        changed, improved = _transpose_pass(current, pos, above, below, allow_equal)
        if improved:
            c = count_crossings(proper, current)
            if c < best_count:
                best_count = c
                best = [list(layer_nodes) for layer_nodes in current]
        if allow_equal and not changed and quiet_strict:
            break
        if not allow_equal:
            quiet_strict = not changed
    return best


def _transpose_pass(
    orders: list[list[str]],
    pos: dict[str, int],
    above: dict[str, list[str]],
    below: dict[str, list[str]],
    allow_equal: bool,
) -> tuple[bool, bool]:
    """One scan of adjacent exchanges over every layer.

    Swaps a pair when that strictly lowers its crossings, or any tied
    pair in allow_equal passes; the caller only keeps orderings that
    beat its best, so tie swaps explore without ever costing anything.
    Returns whether anything moved and whether any move was a strict gain.
    """
    changed = False
    improved = False
    for layer_nodes in orders:
        for i in range(len(layer_nodes) - 1):
            a, b = layer_nodes[i], layer_nodes[i + 1]
            keep = _pair_crossings(a, b, pos, above, below)
            swap = _pair_crossings(b, a, pos, above, below)
            if swap < keep or (allow_equal and swap == keep):
                layer_nodes[i], layer_nodes[i + 1] = b, a
                pos[a], pos[b] = pos[b], pos[a]
                changed = True
                improved = improved or swap < keep
    return changed, improved


def _pair_crossings(
    left: str,
    right: str,
    pos: dict[str, int],
    above: dict[str, list[str]],
    below: dict[str, list[str]],
) -> int:
    """Crossings between the segments of two same-layer nodes, left first."""
    total = 0
    for neighbors in (above, below):
        for x in neighbors[left]:
            px = pos[x]
            for y in neighbors[right]:
                if px > pos[y]:
                    total += 1
    return total


def _reorder(orders: list[list[str]], li: int, neighbors: dict[str, list[str]]) -> None:
    # The graph is proper, so all of a node's neighbors on the swept side
    # live in one adjacent layer; a global per-layer index is enough.
    pos: dict[str, int] = {}
    for layer_nodes in orders:
        for i, n in enumerate(layer_nodes):
            pos[n] = i
    rank = {n: i for i, n in enumerate(orders[li])}

    def key(n: str) -> tuple[float, int, str]:
        ps = [pos[m] for m in neighbors[n]]
        bc = sum(ps) / len(ps) if ps else float(rank[n])
        return (bc, rank[n], n)

    orders[li].sort(key=key)


def assign_coordinates(
    orders: Sequence[Sequence[str]], config: LayoutConfig
) -> dict[str, tuple[float, float]]:
    """Slot positions: layers layer_gap apart, nodes node_gap apart, centered."""
    positions: dict[str, tuple[float, float]] = {}
    for li, layer_nodes in enumerate(orders):
        k = len(layer_nodes)
        along = li * config.layer_gap
        for i, n in enumerate(layer_nodes):
            across = (i - (k - 1) / 2) * config.node_gap
            if config.direction is Direction.TOP_DOWN:
                positions[n] = (across, along)
            else:
                positions[n] = (along, across)
    return positions


@dataclass
class _Pipeline:
    """Intermediate products of a full layout run, kept for inspection in tests."""

    reversed_links: set[str]
    layers: dict[str, int]
    proper: ProperGraph
    initial_orders: list[list[str]]
    final_orders: list[list[str]]


def _initial_orders(proper: ProperGraph, config: LayoutConfig) -> list[list[str]]:
    doc_rank = {n: i for i, n in enumerate(proper.base_order)}

    def key(n: str) -> object:
        return n if config.deterministic_seed_order else doc_rank[n]

    layers = proper.nodes_by_layer()
    return [sorted(layer_nodes, key=key) for layer_nodes in layers]


def _previous_ranks(previous: LayeredLayout) -> dict[str, int]:
    """Recover per-layer slot ranks, dummies included, from layout geometry.

    order_of only covers real nodes, but routes still hold the dummy
    coordinates, so grouping every point by its shared layer coordinate
    and sorting within groups reproduces the full layer sequences. Real
    ranks must come back consecutive; that check also picks which axis
    runs along the layers.
    """
    points: list[tuple[str, float, float]] = [
        (n, x, y) for n, (x, y) in previous.position_of.items()
    ]
    for link_id, pts in previous.routes.items():
        if len(pts) <= 2:
            continue
        interior = pts[1:-1]
        if link_id in previous.reversed_links:
            interior = interior[::-1]
        for i, (x, y) in enumerate(interior):
            points.append((f"{_DUMMY_PREFIX}{link_id}:{i}", x, y))

    for along, across in ((2, 1), (1, 2)):
        groups: dict[float, list[tuple[float, str]]] = defaultdict(list)
        for item in points:
            groups[item[along]].append((item[across], item[0]))
        ranks: dict[str, int] = {}
        plausible = True
        for group in groups.values():
            group.sort()
            reals = [n for _, n in group if n in previous.order_of]
            if [previous.order_of[n] for n in reals] != list(range(len(reals))):
                plausible = False
                break
            for rank, (_, n) in enumerate(group):
                ranks[n] = rank
        if plausible:
            return ranks
    return dict(previous.order_of)


def _incremental_orders(proper: ProperGraph, previous: LayeredLayout) -> list[list[str]]:
    """Orders that keep every surviving node in its previous relative slot.

    Survivors are laid down frozen in their recovered order; whatever the
    previous layout has no rank for is inserted one node at a time where
    it adds the fewest crossings. No sweeps run afterwards, so no pair of
    survivors ever flips.
    """
    ranks = _previous_ranks(previous)
    orders: list[list[str]] = [[] for _ in range(proper.layer_count)]
    survivors = [n for n in proper.base_order if n in ranks]
    survivors.sort(key=lambda n: (ranks[n], n))
    for n in survivors:
        orders[proper.layer_of[n]].append(n)
    for n in proper.base_order:
        if n not in ranks:
            _insert_at_best(proper, orders, n)
    return orders


def _insert_at_best(proper: ProperGraph, orders: list[list[str]], node: str) -> None:
    li = proper.layer_of[node]
    layer_nodes = orders[li]
    best_index = 0
    best_cost: int | None = None
    for index in range(len(layer_nodes) + 1):
        layer_nodes.insert(index, node)
        cost = _crossings_touching(proper, orders, li)
        layer_nodes.pop(index)
        if best_cost is None or cost < best_cost:
            best_cost = cost
            best_index = index
    layer_nodes.insert(best_index, node)


def _crossings_touching(proper: ProperGraph, orders: list[list[str]], li: int) -> int:
    """Crossings in the two layer pairs around li, ignoring unplaced nodes."""
    pos: dict[str, int] = {}
    for layer_nodes in orders:
        for i, n in enumerate(layer_nodes):
            pos[n] = i
    by_layer: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for u, v, _ in proper.segments:
        lu = proper.layer_of[u]
        if lu in (li - 1, li) and u in pos and v in pos:
            by_layer[lu].append((pos[u], pos[v]))
    total = 0
    for seg in by_layer.values():
        seg.sort()
        total += _count_inversions([v for _, v in seg])
    return total


def _run_pipeline(
    model: ModelDocument, config: LayoutConfig, previous: LayeredLayout | None
) -> _Pipeline:
    nodes = [n.id for n in model.nodes]
    edges: list[Edge] = [(l.id, l.source, l.target) for l in model.links]

    reversed_links = remove_cycles(nodes, edges)
    layers = assign_layers(nodes, oriented_edges(edges, reversed_links))
    proper = insert_dummies(nodes, edges, reversed_links, layers)
    if previous is None:
        initial = _initial_orders(proper, config)
        final = minimize_crossings(proper, initial, config.max_sweeps)
    else:
        initial = _incremental_orders(proper, previous)
        final = [list(layer_nodes) for layer_nodes in initial]
    return _Pipeline(reversed_links, layers, proper, initial, final)


def layout(
    model: ModelDocument,
    config: LayoutConfig | None = None,
    previous_layout: LayeredLayout | None = None,
) -> LayeredLayout:
    """Lay out a model; pass the previous layout to keep surviving nodes in place."""
    config = config or LayoutConfig()
    pipe = _run_pipeline(model, config, previous_layout)
    positions = assign_coordinates(pipe.final_orders, config)

    order_of: dict[str, int] = {}
    for layer_nodes in pipe.final_orders:
        rank = 0
        for n in layer_nodes:
            if n in pipe.proper.real_ids:
                order_of[n] = rank
                rank += 1

    routes: dict[str, list[tuple[float, float]]] = {}
    for link in model.links:
        chain = pipe.proper.chains[link.id]
        pts = [positions[n] for n in chain]
        if link.id in pipe.reversed_links:
            pts.reverse()
        routes[link.id] = pts

    return LayeredLayout(
        layer_of={n: pipe.layers[n] for n in pipe.layers},
        order_of=order_of,
        position_of={n.id: positions[n.id] for n in model.nodes},
        routes=routes,
        reversed_links=pipe.reversed_links,
        crossing_count=count_crossings(pipe.proper, pipe.final_orders),
    )
