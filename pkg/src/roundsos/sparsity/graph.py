"""Correlative sparsity: csp graph, maximal cliques and running-intersection orders."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np
import structlog

from roundsos.core.exceptions import RipFailure
from roundsos.polynomial import Poly
from roundsos.polynomial.poly import mono_variables

logger = structlog.get_logger()


@dataclass(frozen=True)
class CspGraph:
    """Variables as nodes; an edge joins two variables that interact."""

    n: int
    graph: nx.Graph

    @property
    def adjacency(self) -> np.ndarray:
        """Symmetric 0/1 matrix with ones on the diagonal."""
        matrix = nx.to_numpy_array(self.graph, nodelist=range(self.n), dtype=int)
        np.fill_diagonal(matrix, 1)
        return matrix

    def is_chordal(self) -> bool:
        return nx.is_chordal(self.graph)


@dataclass(frozen=True)
class CliqueSet:
    cliques: tuple[frozenset[int], ...]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.cliques)

    def __len__(self) -> int:
        return len(self.cliques)

    def __iter__(self):  # type: ignore[no-untyped-def]
        return iter(self.cliques)

    @classmethod
    def of(cls, cliques: Iterable[Iterable[int]]) -> CliqueSet:
        return cls(tuple(frozenset(c) for c in cliques))


def csp_graph(objective: Poly, constraints: Sequence[Poly] = (), n: Optional[int] = None) -> CspGraph:
    """Edge ``{i, j}`` iff some objective monomial or some constraint involves both."""
    size = n if n is not None else max([objective.nvars, *(g.nvars for g in constraints)])
    graph = nx.Graph()
    graph.add_nodes_from(range(size))
    for mono in objective.terms:
        graph.add_edges_from(combinations(sorted(mono_variables(mono)), 2))
    for g in constraints:
        graph.add_edges_from(combinations(sorted(g.variables()), 2))
    return CspGraph(size, graph)


def _canonical(cliques: Iterable[Iterable[int]]) -> CliqueSet:
    ordered = sorted((tuple(sorted(c)) for c in cliques), key=lambda c: (c[0], -len(c), c))
    return CliqueSet.of(ordered)


def maximal_cliques(g: CspGraph, chordal: bool = True) -> CliqueSet:
    """Maximal cliques, after a minimum-degree chordal completion when needed.

    With ``chordal=False`` the maximal cliques of ``g`` itself are returned,
    which may admit no running-intersection order.
    """
    if not chordal:
        return _canonical(nx.find_cliques(g.graph))
    graph = g.graph
    if not nx.is_chordal(graph):
        graph, _ = nx.complete_to_chordal_graph(graph)
        logger.debug(
            "Completed csp graph to chordal",
            added_edges=graph.number_of_edges() - g.graph.number_of_edges(),
        )
    return _canonical(nx.chordal_graph_cliques(graph))


def check_rip(cliques: Sequence[frozenset[int]]) -> Optional[int]:
    """Index of the first clique breaking the running intersection property, or None."""
    union: set[int] = set()
    for i, clique in enumerate(cliques):
        if i > 0:
            overlap = clique & union
            if not any(overlap <= cliques[j] for j in range(i)):
                return i
        union |= clique
    return None


def rip_order(cs: CliqueSet) -> CliqueSet:
    """Reorder cliques along a maximum-weight clique tree.

    Raises:
        RipFailure: if the resulting order breaks the property, which only
            happens for clique families that do not come from a chordal graph.
    """
    if len(cs) <= 1:
        return cs
    tree = nx.Graph()
    tree.add_nodes_from(range(len(cs)))
    for a, b in combinations(range(len(cs)), 2):
        weight = len(cs.cliques[a] & cs.cliques[b])
        if weight:
            tree.add_edge(a, b, weight=weight)
    span = nx.maximum_spanning_tree(tree)
    order: list[int] = []
    for component in sorted(nx.connected_components(span), key=min):
        root = max(component, key=lambda c: (len(cs.cliques[c]), -c))
        order.extend(nx.bfs_tree(span, root, sort_neighbors=sorted))
    ordered = tuple(cs.cliques[i] for i in order)
    witness = check_rip(ordered)
    if witness is not None:
        raise RipFailure(
            "clique family has no running intersection order",
            witness=witness,
            details={"cliques": [sorted(c) for c in ordered]},
        )
    return CliqueSet(ordered)


def covers(cliques: Iterable[frozenset[int]], supports: Iterable[Iterable[int]]) -> Optional[frozenset[int]]:
    """First variable set not contained in any clique, or None."""
    family = list(cliques)
    for s in supports:
        vs = frozenset(s)
        if not any(vs <= c for c in family):
            return vs
    return None


def linear_part_cliques(n: int, m: int) -> CliqueSet:
    """``{x_0..x_{n-1}, e_j}`` for each of the ``m`` error variables ``e_j = n + j``."""
    inputs = frozenset(range(n))
    return CliqueSet(tuple(inputs | {n + j} for j in range(m)))
