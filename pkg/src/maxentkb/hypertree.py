"""Clustering of rules into a hypertree of variable sets.

Each rule groups the variables of its premise and conclusion into one
cluster. The clusters induce an undirected dependency graph, which is
triangulated and decomposed into maximal cliques; a maximum-weight
spanning tree over the cliques (weighted by shared-variable count)
yields the hypertree used to store the factored distribution.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InternalError, SchemaError
from .model import Rule, Variable, variables_of, world_count

# ---------------------------------------------------------------------------
# Graphs


@dataclass(frozen=True)
class Graph:
    """Undirected graph over declared variables (declaration order kept)."""

    vertices: tuple[Variable, ...]
    edges: frozenset[frozenset[Variable]]

    def __post_init__(self):
        vset = set(self.vertices)
        for edge in self.edges:
            if len(edge) != 2 or not edge <= vset:
                raise SchemaError(f"bad edge {sorted(v.name for v in edge)}")

    def neighbors(self, v: Variable) -> set[Variable]:
        return {w for edge in self.edges if v in edge for w in edge if w != v}

    def adjacency(self) -> dict[Variable, set[Variable]]:
        adj: dict[Variable, set[Variable]] = {v: set() for v in self.vertices}
        for edge in self.edges:
            a, b = tuple(edge)
            adj[a].add(b)
            adj[b].add(a)
        return adj


@dataclass(frozen=True)
class MixedGraph:
    """Directed arrows premise→conclusion plus undirected conclusion edges."""

    vertices: tuple[Variable, ...]
    arrows: frozenset[tuple[Variable, Variable]]
    edges: frozenset[frozenset[Variable]]


@dataclass(frozen=True)
class ClusterHypergraph:
    vertices: tuple[Variable, ...]
    clusters: tuple[frozenset[Variable], ...]

    def __post_init__(self):
        vset = set(self.vertices)
        for cluster in self.clusters:
            if not cluster or not cluster <= vset:
                raise SchemaError("cluster empty or outside declared variables")


def clusters_from_rules(
    variables: Sequence[Variable], rules: Sequence[Rule]
) -> ClusterHypergraph:
    """One cluster per rule, plus a singleton for each unmentioned variable."""
    variables = tuple(variables)
    clusters = [rule.cluster() for rule in rules]
    covered = set().union(*clusters) if clusters else set()
    clusters.extend(frozenset([v]) for v in variables if v not in covered)
    return ClusterHypergraph(variables, tuple(clusters))


def dependency_graph(variables: Sequence[Variable], rules: Sequence[Rule]) -> Graph:
    """Edge between two variables iff they share a rule's cluster."""
    edges: set[frozenset[Variable]] = set()
    for rule in rules:
        cluster = sorted(rule.cluster(), key=lambda v: variables.index(v))
        for i, a in enumerate(cluster):
            for b in cluster[i + 1:]:
                edges.add(frozenset((a, b)))
    return Graph(tuple(variables), frozenset(edges))


def mixed_graph(variables: Sequence[Variable], rules: Sequence[Rule]) -> MixedGraph:
    arrows: set[tuple[Variable, Variable]] = set()
    edges: set[frozenset[Variable]] = set()
    for rule in rules:
        prem = variables_of(rule.premise)
        conc = variables_of(rule.conclusion)
        for a in prem:
            for b in conc:
                if a != b:
                    arrows.add((a, b))
        conc_list = sorted(conc, key=lambda v: variables.index(v))
        for i, a in enumerate(conc_list):
            for b in conc_list[i + 1:]:
                edges.add(frozenset((a, b)))
    return MixedGraph(tuple(variables), frozenset(arrows), frozenset(edges))


# ---------------------------------------------------------------------------
# Triangulation


def _declaration_index(variables: Sequence[Variable]) -> dict[Variable, int]:
    return {v: i for i, v in enumerate(variables)}


def _fill_count(adj: dict[Variable, set[Variable]], v: Variable) -> int:
    nbrs = list(adj[v])
    missing = 0
    for i, a in enumerate(nbrs):
        for b in nbrs[i + 1:]:
            if b not in adj[a]:
                missing += 1
    return missing


def _eliminate(
    adj: dict[Variable, set[Variable]], order: Sequence[Variable]
) -> tuple[set[frozenset[Variable]], list[frozenset[Variable]]]:
    """Eliminate in the given order; return fill edges and per-step cliques."""
    adj = {v: set(nbrs) for v, nbrs in adj.items()}
    fill: set[frozenset[Variable]] = set()
    cliques: list[frozenset[Variable]] = []
    for v in order:
        nbrs = list(adj[v])
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1:]:
                if b not in adj[a]:
                    adj[a].add(b)
                    adj[b].add(a)
                    fill.add(frozenset((a, b)))
        cliques.append(frozenset([v, *nbrs]))
        for a in nbrs:
            adj[a].discard(v)
        del adj[v]
    return fill, cliques


def _min_fill_order(graph: Graph) -> list[Variable]:
    decl = _declaration_index(graph.vertices)
    adj = graph.adjacency()
    order: list[Variable] = []
    while adj:
        v = min(adj, key=lambda u: (_fill_count(adj, u), decl[u]))
        nbrs = list(adj[v])
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1:]:
                adj[a].add(b)
                adj[b].add(a)
        for a in nbrs:
            adj[a].discard(v)
        del adj[v]
        order.append(v)
    return order


def _max_cardinality_order(graph: Graph) -> list[Variable]:
    """Maximum-cardinality search visit order, then eliminate in reverse."""
    decl = _declaration_index(graph.vertices)
    adj = graph.adjacency()
    visited: list[Variable] = []
    unvisited = set(graph.vertices)
    weight = {v: 0 for v in graph.vertices}
    while unvisited:
        v = min(unvisited, key=lambda u: (-weight[u], decl[u]))
        unvisited.discard(v)
        visited.append(v)
        for w in adj[v]:
            if w in unvisited:
                weight[w] += 1
    return list(reversed(visited))


def _is_perfect_elimination(
    adj: dict[Variable, set[Variable]], order: Sequence[Variable]
) -> bool:
    """Later neighbors of every vertex must form a clique."""
    position = {v: i for i, v in enumerate(order)}
    for v in order:
        later = [w for w in adj[v] if position[w] > position[v]]
        for i, a in enumerate(later):
            for b in later[i + 1:]:
                if b not in adj[a]:
                    return False
    return True


def triangulate(
    graph: Graph, heuristic: str = "min_fill"
) -> tuple[list[Variable], Graph, list[frozenset[Variable]]]:
    """Fill the graph chordal; return elimination order, graph, maximal cliques.

    ``min_fill`` repeatedly eliminates the vertex whose elimination adds the
    fewest fill edges; ``max_cardinality`` eliminates in reverse visit order
    of a maximum-cardinality search. Ties go to the earliest-declared
    variable in both.
    """
    if heuristic == "min_fill":
        order = _min_fill_order(graph)
    elif heuristic == "max_cardinality":
        order = _max_cardinality_order(graph)
    else:
        raise SchemaError(f"unknown heuristic {heuristic!r}")

    fill, step_cliques = _eliminate(graph.adjacency(), order)
    chordal = Graph(graph.vertices, graph.edges | frozenset(fill))
    if not _is_perfect_elimination(chordal.adjacency(), order):
        raise InternalError("elimination order is not perfect for the filled graph")

    maximal: list[frozenset[Variable]] = []
    for clique in step_cliques:
        if any(clique <= other for other in step_cliques if other != clique):
            continue
        if clique not in maximal:
            maximal.append(clique)
    return order, chordal, maximal


# ---------------------------------------------------------------------------
# Hypertree


@dataclass(frozen=True)
class Hyperedge:
    index: int
    variables: tuple[Variable, ...]  # declaration order

    @property
    def var_set(self) -> frozenset[Variable]:
        return frozenset(self.variables)

    @property
    def label(self) -> str:
        return "{" + ", ".join(v.name for v in self.variables) + "}"

    @property
    def table_size(self) -> int:
        return world_count(self.variables)


@dataclass(frozen=True)
class Hypertree:
    """Tree of hyperedges with per-edge separators and rule-home assignment."""

    hyperedges: tuple[Hyperedge, ...]
    tree_edges: tuple[tuple[int, int], ...]
    separators: tuple[tuple[Variable, ...], ...]  # aligned with tree_edges
    cluster_homes: tuple[int, ...]  # per input cluster, containing hyperedge
    neighbors: dict[int, tuple[int, ...]] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        n = len(self.hyperedges)
        if len(self.tree_edges) != max(n - 1, 0):
            raise InternalError("hypertree edge count is not node count - 1")
        nbrs: dict[int, list[int]] = {i: [] for i in range(n)}
        for (i, j), sep in zip(self.tree_edges, self.separators):
            nbrs[i].append(j)
            nbrs[j].append(i)
            if set(sep) != self.hyperedges[i].var_set & self.hyperedges[j].var_set:
                raise InternalError("separator is not the endpoint intersection")
        object.__setattr__(
            self, "neighbors", {i: tuple(sorted(js)) for i, js in nbrs.items()}
        )
        if n and not _connected(n, self.tree_edges):
            raise InternalError("hypertree is not connected")
        _verify_running_intersection(self)

    def separator_of(self, i: int, j: int) -> tuple[Variable, ...]:
        key = (i, j) if i < j else (j, i)
        return self.separators[self.tree_edges.index(key)]

    def edges_containing(self, variable: Variable) -> list[int]:
        return [h.index for h in self.hyperedges if variable in h.var_set]


def _connected(n: int, edges: Iterable[tuple[int, int]]) -> bool:
    adj: dict[int, list[int]] = {i: [] for i in range(n)}
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    stack = [0]
    while stack:
        for j in adj[stack.pop()]:
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return len(seen) == n


def _verify_running_intersection(tree: Hypertree) -> None:
    """Hyperedges containing any given variable must induce a connected subtree."""
    for variable in {v for h in tree.hyperedges for v in h.variables}:
        holders = {h.index for h in tree.hyperedges if variable in h.var_set}
        within = sum(1 for i, j in tree.tree_edges if i in holders and j in holders)
        if within != len(holders) - 1:
            raise InternalError(
                f"running intersection violated for variable {variable.name!r}"
            )


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> bool:
        ri, rj = self.find(i), self.find(j)
        if ri == rj:
            return False
        self.parent[rj] = ri
        return True


def build_hypertree(
    variables: Sequence[Variable],
    cliques: Sequence[frozenset[Variable]],
    clusters: Sequence[frozenset[Variable]],
) -> Hypertree:
    """Assemble the hypertree from maximal cliques.

    Maximum-weight spanning tree with shared-variable count as weight;
    ties broken by separator table size, then by the pair of clique
    labels. Cliques sharing nothing are attached to the root with an
    empty separator. Every input cluster gets a home hyperedge (the
    smallest one containing it).
    """
    decl = _declaration_index(variables)
    hyperedges = tuple(
        Hyperedge(i, tuple(sorted(clique, key=decl.__getitem__)))
        for i, clique in enumerate(cliques)
    )

    candidates = []
    for i, a in enumerate(hyperedges):
        for j in range(i + 1, len(hyperedges)):
            b = hyperedges[j]
            shared = a.var_set & b.var_set
            if shared:
                sep_size = world_count(tuple(shared))
                candidates.append((-len(shared), sep_size, (a.label, b.label), i, j))
    candidates.sort()

    uf = _UnionFind(len(hyperedges))
    edges: list[tuple[int, int]] = []
    for *_unused, i, j in candidates:
        if uf.union(i, j):
            edges.append((i, j))
    for j in range(1, len(hyperedges)):
        if uf.union(0, j):
            edges.append((0, j))  # disconnected component: empty separator

    edges.sort()
    separators = tuple(
        tuple(
            sorted(
                hyperedges[i].var_set & hyperedges[j].var_set, key=decl.__getitem__
            )
        )
        for i, j in edges
    )

    homes = []
    for cluster in clusters:
        containing = [h for h in hyperedges if cluster <= h.var_set]
        if not containing:
            raise InternalError(
                f"cluster {sorted(v.name for v in cluster)} not contained in any clique"
            )
        homes.append(min(containing, key=lambda h: (h.table_size, h.index)).index)

    return Hypertree(hyperedges, tuple(edges), separators, tuple(homes))


def build_from_rules(
    variables: Sequence[Variable], rules: Sequence[Rule], heuristic: str = "min_fill"
) -> Hypertree:
    """Full pipeline: clusters, dependency graph, triangulation, tree."""
    hypergraph = clusters_from_rules(variables, rules)
    graph = dependency_graph(variables, rules)
    _order, _chordal, cliques = triangulate(graph, heuristic)
    return build_hypertree(variables, cliques, hypergraph.clusters)


# ---------------------------------------------------------------------------
# Export


def dependency_graph_document(graph: Graph) -> dict:
    decl = _declaration_index(graph.vertices)
    edges = sorted(
        (sorted(edge, key=decl.__getitem__) for edge in graph.edges),
        key=lambda pair: (decl[pair[0]], decl[pair[1]]),
    )
    return {
        "kind": "dependency",
        "nodes": [{"id": v.name} for v in graph.vertices],
        "edges": [{"source": a.name, "target": b.name} for a, b in edges],
    }


def mixed_graph_document(graph: MixedGraph) -> dict:
    decl = _declaration_index(graph.vertices)
    arrows = sorted(graph.arrows, key=lambda p: (decl[p[0]], decl[p[1]]))
    edges = sorted(
        (sorted(edge, key=decl.__getitem__) for edge in graph.edges),
        key=lambda pair: (decl[pair[0]], decl[pair[1]]),
    )
    return {
        "kind": "mixed",
        "nodes": [{"id": v.name} for v in graph.vertices],
        "edges": (
            [{"source": a.name, "target": b.name, "directed": True} for a, b in arrows]
            + [{"source": a.name, "target": b.name, "directed": False} for a, b in edges]
        ),
    }


def structure_graph_document(tree: Hypertree) -> dict:
    return {
        "kind": "structure",
        "nodes": [
            {"id": f"H{h.index + 1}", "variables": [v.name for v in h.variables]}
            for h in tree.hyperedges
        ],
        "edges": [
            {
                "source": f"H{i + 1}",
                "target": f"H{j + 1}",
                "separator": [v.name for v in sep],
            }
            for (i, j), sep in zip(tree.tree_edges, tree.separators)
        ],
    }


def graph_to_dot(document: dict) -> str:
    """Render any of the three graph documents as GraphViz DOT."""
    kind = document["kind"]
    directed_any = any(e.get("directed") for e in document["edges"])
    lines = [("digraph" if directed_any else "graph") + f" {kind} {{"]
    for node in document["nodes"]:
        if "variables" in node:
            label = "{" + ", ".join(node["variables"]) + "}"
            lines.append(f'  "{node["id"]}" [label="{label}"];')
        else:
            lines.append(f'  "{node["id"]}";')
    for edge in document["edges"]:
        arrow = "->" if directed_any else "--"
        attrs = ""
        if directed_any and not edge.get("directed", True):
            attrs = " [dir=none]"
        if "separator" in edge:
            label = ", ".join(edge["separator"])
            attrs = f' [label="{label}"]'
        lines.append(f'  "{edge["source"]}" {arrow} "{edge["target"]}"{attrs};')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_graph(document: dict, format: str = "json") -> str:
    if format == "json":
        return json.dumps(document, indent=2) + "\n"
    if format == "dot":
        return graph_to_dot(document)
    raise SchemaError(f"unknown export format {format!r}")
