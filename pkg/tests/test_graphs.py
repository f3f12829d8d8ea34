import itertools
import json

import numpy as np
import pytest

from conftest import (
    brute_force_independence,
    brute_force_maximal_cliques,
    random_graph,
)
from theta_selftest.graphs import (
    ResourceLimitError,
    WeightedGraph,
    circulant,
    complement,
    find_isomorphism,
    fractional_packing,
    from_json_dict,
    graph_to_json,
    independence_number,
    is_isomorphic,
    is_vertex_transitive,
    maximal_cliques,
    mobius_ladder,
    shrikhande_complement,
    to_dot,
    to_json_dict,
)


class TestWeightedGraph:
    def test_defaults_and_canonicalization(self):
        g = WeightedGraph(3, [(2, 1), (0, 1)])
        assert g.edges == ((0, 1), (1, 2))
        assert g.weights == (1.0, 1.0, 1.0)
        assert g.has_edge(1, 2) and g.has_edge(2, 1)
        assert not g.has_edge(0, 2)
        assert g.degree(1) == 2

    @pytest.mark.parametrize(
        "n,edges,weights",
        [
            (0, [], None),
            (2, [(0, 0)], None),
            (2, [(0, 2)], None),
            (2, [(0, 1), (1, 0)], None),
            (2, [], [1.0]),
            (2, [], [1.0, -0.5]),
        ],
    )
    def test_invalid_inputs(self, n, edges, weights):
        with pytest.raises(ValueError):
            WeightedGraph(n, edges, weights)


class TestGenerators:
    def test_circulant_edge_rule(self):
        g = circulant(8, (1, 4))
        for i, j in itertools.combinations(range(8), 2):
            d = (j - i) % 8
            expect = min(d, 8 - d) in (1, 4)
            assert g.has_edge(i, j) == expect

    def test_circulant_validation(self):
        with pytest.raises(ValueError):
            circulant(2, (1,))
        with pytest.raises(ValueError):
            circulant(8, ())
        with pytest.raises(ValueError):
            circulant(8, (1, 5))

    def test_mobius_ladder_is_circulant(self):
        for n in (2, 3, 5):
            assert mobius_ladder(n) == circulant(4 * n, (1, 2 * n))
        with pytest.raises(ValueError):
            mobius_ladder(1)

    def test_complement_involution(self):
        g = random_graph(np.random.default_rng(5), max_n=9)
        cc = complement(complement(g))
        assert cc.edges == g.edges and cc.weights == g.weights
        full = len(g.edges) + len(complement(g).edges)
        assert full == g.n * (g.n - 1) // 2

    def test_shrikhande_complement_structure(self):
        g = shrikhande_complement()
        assert g.n == 16
        assert all(g.degree(v) == 9 for v in range(16))
        assert is_vertex_transitive(g)
        value, _ = independence_number(g)
        assert value == 3.0


class TestIndependence:
    def test_matches_brute_force_on_random_graphs(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            g = random_graph(rng, max_n=10)
            value, witness = independence_number(g)
            bf_value, bf_witness = brute_force_independence(g)
            assert value == pytest.approx(bf_value, abs=1e-9)
            assert witness == bf_witness
            chosen = set(witness)
            assert not any(u in chosen and v in chosen for u, v in g.edges)

    def test_unweighted_cycle(self):
        assert independence_number(circulant(5, (1,)))[0] == 2.0
        assert independence_number(circulant(8, (1, 4)))[0] == 3.0

    def test_weight_zero_vertices_allowed(self):
        g = WeightedGraph(3, [(0, 1)], [0.0, 2.0, 0.5])
        value, witness = independence_number(g)
        assert value == 2.5
        assert witness == (1, 2)


class TestCliquesAndPacking:
    def test_maximal_cliques_match_brute_force(self):
        rng = np.random.default_rng(23)
        for _ in range(10):
            g = random_graph(rng, max_n=9)
            assert maximal_cliques(g) == brute_force_maximal_cliques(g)

    def test_clique_limit(self):
        g = complement(WeightedGraph(6, []))  # K6: 1 maximal clique, fine
        assert len(maximal_cliques(g)) == 1
        with pytest.raises(ResourceLimitError):
            maximal_cliques(WeightedGraph(8, []), limit=4)

    def test_fractional_packing_closed_forms(self):
        assert fractional_packing(circulant(5, (1,))) == pytest.approx(2.5, abs=1e-9)
        assert fractional_packing(WeightedGraph(4, [])) == pytest.approx(4.0, abs=1e-9)
        k4 = complement(WeightedGraph(4, []))
        assert fractional_packing(k4) == pytest.approx(1.0, abs=1e-9)

    def test_fractional_packing_weighted(self):
        g = WeightedGraph(2, [(0, 1)], [0.5, 2.0])
        assert fractional_packing(g) == pytest.approx(2.0, abs=1e-9)


class TestSymmetry:
    def test_vertex_transitive_families(self):
        assert is_vertex_transitive(circulant(6, (1,)))
        assert is_vertex_transitive(circulant(8, (1, 4)))
        path = WeightedGraph(3, [(0, 1), (1, 2)])
        assert not is_vertex_transitive(path)

    def test_vertex_transitive_resource_limit(self):
        with pytest.raises(ResourceLimitError):
            is_vertex_transitive(WeightedGraph(33, []))

    def test_isomorphism_roundtrip(self):
        rng = np.random.default_rng(7)
        g = random_graph(rng, max_n=8)
        perm = rng.permutation(g.n)
        h = WeightedGraph(
            g.n, [(int(perm[u]), int(perm[v])) for u, v in g.edges]
        )
        p = find_isomorphism(g, h)
        assert p is not None
        for u, v in itertools.combinations(range(g.n), 2):
            assert g.has_edge(u, v) == h.has_edge(p[u], p[v])
        assert is_isomorphic(g, h)

    def test_non_isomorphic(self):
        assert not is_isomorphic(circulant(6, (1,)), circulant(6, (2,)))
        assert find_isomorphism(WeightedGraph(3, []), WeightedGraph(4, [])) is None


class TestSerialization:
    def test_json_roundtrip(self):
        g = random_graph(np.random.default_rng(3), max_n=7)
        doc = to_json_dict(g)
        assert from_json_dict(json.loads(json.dumps(doc))) == g

    def test_malformed_json(self):
        with pytest.raises(ValueError):
            from_json_dict({"edges": [[0, 1]]})
        with pytest.raises(ValueError):
            from_json_dict({"n": 2, "edges": [[0, 5]], "weights": [1, 1]})

    def test_graph_to_json_deterministic(self):
        g = circulant(6, (1, 3))
        assert graph_to_json(g) == graph_to_json(g)

    def test_dot_output(self):
        g = WeightedGraph(3, [(0, 1), (1, 2)], [1.0, 2.0, 1.0])
        dot = to_dot(g)
        assert dot == to_dot(g)
        assert dot.count(" -- ") == 2
        assert dot.count('weight="') == 3
