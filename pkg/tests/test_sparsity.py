"""Tests for the csp graph, maximal cliques and running-intersection orders."""

from itertools import permutations

import networkx as nx
import numpy as np
import pytest

from roundsos.core.exceptions import RipFailure
from roundsos.polynomial import Poly
from roundsos.polynomial.poly import mono_variables
from roundsos.program.symbolic import expr_to_poly
from roundsos.sparsity.graph import (
    CliqueSet,
    CspGraph,
    check_rip,
    covers,
    csp_graph,
    linear_part_cliques,
    maximal_cliques,
    rip_order,
)

# 0-based form of {1,4}, {1,2,3}, {1,2,5}, {1,5,6}, {1,3,6}
KEPLER0_CLIQUES = [{0, 3}, {0, 1, 2}, {0, 1, 4}, {0, 4, 5}, {0, 2, 5}]

KEPLER0_CSP = np.array(
    [
        [1, 1, 1, 1, 1, 1],
        [1, 1, 1, 0, 1, 0],
        [1, 1, 1, 0, 0, 1],
        [1, 0, 0, 1, 0, 0],
        [1, 1, 0, 0, 1, 1],
        [1, 0, 1, 0, 1, 1],
    ]
)


@pytest.fixture
def kepler0_graph(load_bench) -> CspGraph:
    spec = load_bench("kepler0")
    return csp_graph(expr_to_poly(spec.objective, spec.n))


class TestCspGraph:
    def test_kepler0_matrix(self, kepler0_graph):
        assert (kepler0_graph.adjacency == KEPLER0_CSP).all()
        assert not kepler0_graph.is_chordal()

    def test_constraints_add_edges(self):
        x = [Poly.var(i, 3) for i in range(3)]
        g = csp_graph(x[0] + x[1] + x[2], [1 - x[0] * x[2]])
        assert set(map(frozenset, g.graph.edges)) == {frozenset({0, 2})}


class TestMaximalCliques:
    def test_kepler0_graph_cliques(self, kepler0_graph):
        cliques = maximal_cliques(kepler0_graph, chordal=False)
        assert set(cliques) == {frozenset(c) for c in KEPLER0_CLIQUES}

    def test_kepler0_chordal_completion(self, kepler0_graph):
        cliques = maximal_cliques(kepler0_graph)
        assert sorted(cliques.sizes) == [2, 4, 4]
        assert all(0 in c for c in cliques)
        # every original clique fits inside a completed one
        for small in KEPLER0_CLIQUES:
            assert any(small <= c for c in cliques)

    def test_complete_graph(self):
        cliques = maximal_cliques(CspGraph(4, nx.complete_graph(4)))
        assert list(cliques) == [frozenset(range(4))]

    def test_path(self):
        cliques = maximal_cliques(CspGraph(3, nx.path_graph(3)))
        assert list(cliques) == [frozenset({0, 1}), frozenset({1, 2})]

    def test_isolated_nodes_get_singletons(self):
        graph = nx.Graph()
        graph.add_nodes_from(range(3))
        graph.add_edge(0, 1)
        cliques = maximal_cliques(CspGraph(3, graph))
        assert frozenset({2}) in set(cliques)


class TestRipOrder:
    def test_kepler0_chordal_order(self, kepler0_graph):
        ordered = rip_order(maximal_cliques(kepler0_graph))
        assert check_rip(ordered.cliques) is None

    def test_kepler0_graph_cliques_have_no_order(self, kepler0_graph):
        cliques = maximal_cliques(kepler0_graph, chordal=False).cliques
        assert all(check_rip(list(p)) is not None for p in permutations(cliques))
        with pytest.raises(RipFailure):
            rip_order(CliqueSet(cliques))

    def test_single_clique(self):
        cs = CliqueSet.of([{0, 1, 2}])
        assert rip_order(cs) is cs

    def test_triangle_of_edges(self):
        with pytest.raises(RipFailure) as exc:
            rip_order(CliqueSet.of([{0, 1}, {1, 2}, {0, 2}]))
        assert exc.value.witness == 2

    @pytest.mark.parametrize("name", ["kepler1", "kepler2", "rigidBody2", "himmilbeau", "floudas2_6"])
    def test_benchmark_orders(self, load_bench, name):
        spec = load_bench(name)
        poly = expr_to_poly(spec.objective, spec.n)
        ordered = rip_order(maximal_cliques(csp_graph(poly, n=spec.n)))
        assert check_rip(ordered.cliques) is None
        assert covers(ordered.cliques, (mono_variables(m) for m in poly.terms)) is None


class TestCoverage:
    def test_covers(self):
        cliques = [frozenset({0, 1}), frozenset({1, 2})]
        assert covers(cliques, [{0}, {1, 2}]) is None
        assert covers(cliques, [{0, 2}]) == frozenset({0, 2})

    def test_linear_part_cliques(self):
        cs = linear_part_cliques(3, 2)
        assert cs.cliques == (frozenset({0, 1, 2, 3}), frozenset({0, 1, 2, 4}))
        assert check_rip(cs.cliques) is None
