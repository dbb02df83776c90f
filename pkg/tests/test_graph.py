import threading

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import complete_graph, make_graph, random_graph
from oracles import apl_oracle, lcc_fraction_oracle
from vanetsched.graph import (
    DuplicateNodeError,
    DynamicGraph,
    MissingElementError,
    SelfLoopError,
    UndefinedInputError,
    average_path_length,
    connected_components,
    degree_variance,
    lcc_fraction,
    read_topology,
    write_topology,
)


class TestMutation:
    def test_add_node(self):
        g = DynamicGraph()
        g.add_node(0)
        assert (len(g), g.number_of_edges()) == (1, 0)
        g.add_node(1)
        assert (len(g), g.number_of_edges()) == (2, 0)
        assert g.degree(1) == 0

    def test_duplicate_node_rejected(self):
        g = DynamicGraph()
        g.add_node(0)
        with pytest.raises(DuplicateNodeError):
            g.add_node(0)

    def test_removed_id_is_never_reused(self):
        g = make_graph(2, [])
        g.remove_node(1)
        assert g.is_retired(1)
        with pytest.raises(DuplicateNodeError, match="retired"):
            g.add_node(1)

    def test_add_edge_and_idempotence(self):
        g = make_graph(2, [])
        assert g.add_edge(0, 1) is True
        assert g.degrees().tolist() == [1, 1]
        assert g.add_edge(1, 0) is False
        assert g.degrees().tolist() == [1, 1]
        assert g.number_of_edges() == 1

    def test_self_loop_rejected(self):
        g = make_graph(1, [])
        with pytest.raises(SelfLoopError):
            g.add_edge(0, 0)

    def test_edge_to_missing_node_rejected(self):
        g = make_graph(1, [])
        with pytest.raises(MissingElementError):
            g.add_edge(0, 5)

    def test_remove_node_from_triangle(self):
        g = complete_graph(3)
        g.remove_node(0)
        assert list(g.edges()) == [(1, 2)]
        assert g.degrees().tolist() == [1, 1]
        g.audit()

    def test_remove_edge_splits_path(self):
        g = make_graph(3, [(0, 1), (1, 2)])
        g.remove_edge(0, 1)
        assert connected_components(g) == [{1, 2}, {0}]

    def test_remove_absent_edge_rejected(self):
        g = make_graph(3, [(0, 1)])
        with pytest.raises(MissingElementError):
            g.remove_edge(1, 2)
        with pytest.raises(MissingElementError):
            g.remove_node(9)

    def test_copy_is_independent(self):
        g = complete_graph(4)
        h = g.copy()
        h.remove_node(0)
        assert len(g) == 4 and g.number_of_edges() == 6
        g.audit()
        h.audit()


ops = st.lists(
    st.tuples(st.sampled_from(["add_node", "add_edge", "remove_edge", "remove_node"]),
              st.integers(0, 12), st.integers(0, 12)),
    max_size=80,
)


@given(ops)
@settings(max_examples=200, deadline=None)
def test_invariants_survive_any_operation_sequence(seq):
    g = DynamicGraph()
    for op, a, b in seq:
        try:
            if op == "add_node":
                g.add_node(a)
            elif op == "add_edge":
                g.add_edge(a, b)
            elif op == "remove_edge":
                g.remove_edge(a, b)
            else:
                g.remove_node(a)
        except (DuplicateNodeError, SelfLoopError, MissingElementError):
            pass
        g.audit()
        assert g.total_degree() % 2 == 0
        assert g.total_degree() == 2 * g.number_of_edges()


class TestLcc:
    def test_triangle_plus_isolated(self, triangle_plus_isolated):
        assert lcc_fraction(triangle_plus_isolated) == 0.75

    @pytest.mark.parametrize("n", [1, 2, 7])
    def test_complete(self, n):
        assert lcc_fraction(complete_graph(n)) == 1.0

    def test_no_edges(self):
        assert lcc_fraction(make_graph(5, [])) == pytest.approx(1 / 5)

    def test_empty_rejected(self):
        with pytest.raises(UndefinedInputError):
            lcc_fraction(DynamicGraph())


class TestAveragePathLength:
    def test_path(self):
        assert average_path_length(make_graph(3, [(0, 1), (1, 2)])) == pytest.approx(4 / 3)

    def test_k4(self):
        assert average_path_length(complete_graph(4)) == 1.0

    def test_star(self, star4):
        assert average_path_length(star4) == pytest.approx(1.5)

    def test_restricted_to_largest_component(self):
        g = make_graph(6, [(0, 1), (1, 2), (4, 5)])
        assert average_path_length(g) == pytest.approx(4 / 3)

    def test_tiny_component_rejected(self):
        with pytest.raises(UndefinedInputError):
            average_path_length(make_graph(3, []))
        with pytest.raises(UndefinedInputError):
            average_path_length(DynamicGraph())

    def test_sampled_is_deterministic(self):
        g, _ = random_graph(np.random.default_rng(3), 300, 0.03)
        a = average_path_length(g, source_sample=20, rng_seed=11)
        b = average_path_length(g, source_sample=20, rng_seed=11)
        assert a == b
        full = average_path_length(g, source_sample=None)
        assert a == pytest.approx(full, rel=0.1)

    def test_sample_at_least_component_is_exact(self):
        g, _ = random_graph(np.random.default_rng(4), 40, 0.1)
        assert average_path_length(g, source_sample=1000) == average_path_length(g, source_sample=None)

    def test_matches_floyd_warshall_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(20):
            n = int(rng.integers(2, 40))
            g, edges = random_graph(rng, n, float(rng.uniform(0.02, 0.3)))
            if len(max(connected_components(g), key=len)) < 2:
                continue
            assert average_path_length(g, None) == pytest.approx(apl_oracle(list(range(n)), edges), abs=1e-12)
            assert lcc_fraction(g) == lcc_fraction_oracle(list(range(n)), edges)


class TestDegreeVariance:
    def test_complete(self):
        assert degree_variance(complete_graph(6)) == 0.0

    def test_star(self, star4):
        # degrees {3,1,1,1}, mean 1.5: (2.25 + 3 * 0.25) / 4
        assert degree_variance(star4) == pytest.approx(0.75)

    def test_subset(self, star4):
        assert degree_variance(star4, {1, 2, 3}) == 0.0

    def test_empty_subset_rejected(self, star4):
        with pytest.raises(UndefinedInputError):
            degree_variance(star4, [])


def test_topology_round_trip(tmp_path):
    g = make_graph(5, [(0, 1), (1, 2), (3, 1)])
    table = {0: ("RSU", 0.0, 0.0, 500.0), 1: ("OBU", 12.5, -3.25, 300.0)}
    path = tmp_path / "topo.txt"
    write_topology(path, g, table, header=["test"])
    h, back = read_topology(path)
    assert h.nodes() == g.nodes()
    assert list(h.edges()) == list(g.edges())
    assert back[0] == table[0] and back[1] == table[1]
    assert back[4] == (None, None, None, None)


def test_topology_parse_error_names_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("[nodes]\n0 OBU 1 2 300\n[edges]\n0 zz\n")
    with pytest.raises(ValueError, match=":4:"):
        read_topology(path)


def test_concurrent_readers_agree():
    g, _ = random_graph(np.random.default_rng(8), 200, 0.02)
    expected = (lcc_fraction(g), average_path_length(g, 32, 5), degree_variance(g))
    results = []

    def work():
        results.append((lcc_fraction(g), average_path_length(g, 32, 5), degree_variance(g)))

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert results == [expected] * 8
