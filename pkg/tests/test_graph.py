import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scflink.errors import EdgeListParseError, EmptyGraphError
from scflink.graph import (
    load_edge_list,
    partition_graph,
    run_supersteps,
    write_edge_list,
)

from conftest import graph_from_pairs


def write(tmp_path, text):
    p = tmp_path / "edges.txt"
    p.write_text(text)
    return str(p)


class TestLoadEdgeList:
    def test_duplicate_edges_dropped(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 1\n1 2\n0 1\n"))
        assert g.vertex_count == 3
        assert g.edge_count == 2
        assert g.dropped_duplicates == 1

    def test_self_loops_dropped(self, tmp_path):
        g = load_edge_list(write(tmp_path, "0 0\n0 1\n"))
        assert g.vertex_count == 2
        assert g.edge_count == 1
        assert g.dropped_self_loops == 1

    def test_comment_skip_and_remap(self, tmp_path):
        g = load_edge_list(write(tmp_path, "# c\n5 9\n9 5\n"))
        assert g.vertex_count == 2
        assert g.edge_count == 2
        assert list(g.external_ids) == [5, 9]
        assert g.internal_id(5) == 0 and g.internal_id(9) == 1

    def test_malformed_line_names_line_number(self, tmp_path):
        with pytest.raises(EdgeListParseError) as exc:
            load_edge_list(write(tmp_path, "0 1\nbogus\n"))
        assert exc.value.line_no == 2

    def test_three_tokens_rejected(self, tmp_path):
        with pytest.raises(EdgeListParseError):
            load_edge_list(write(tmp_path, "0 1 7\n"))

    def test_empty_graph(self, tmp_path):
        with pytest.raises(EmptyGraphError):
            load_edge_list(write(tmp_path, "# only comments\n\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            load_edge_list(str(tmp_path / "nope.txt"))

    def test_adjacency_sorted_and_degree_sum(self, tmp_path):
        g = load_edge_list(write(tmp_path, "3 1\n3 0\n3 2\n1 0\n"))
        for v in range(g.vertex_count):
            nbrs = g.out_neighbors(v)
            assert list(nbrs) == sorted(nbrs)
        assert g.out_degrees().sum() == g.edge_count

    def test_ingestion_idempotent(self, tmp_path):
        g1 = load_edge_list(write(tmp_path, "7 3\n3 7\n7 3\n2 2\n2 7\n"))
        out = tmp_path / "canon.txt"
        write_edge_list(g1, str(out))
        g2 = load_edge_list(str(out))
        assert g1.vertex_count == g2.vertex_count
        ext1 = {(g1.external_ids[s], g1.external_ids[d]) for s, d in g1.edges}
        ext2 = {(g2.external_ids[s], g2.external_ids[d]) for s, d in g2.edges}
        assert ext1 == ext2


class TestPartitionGraph:
    def test_mod_partitioning(self):
        g = graph_from_pairs([(0, 1), (1, 2), (2, 3)])
        pa = partition_graph(g, 2)
        assert list(pa.members(0)) == [0, 2]
        assert list(pa.members(1)) == [1, 3]

    def test_single_partition(self):
        g = graph_from_pairs([(0, 1), (1, 2), (2, 3), (3, 4)])
        pa = partition_graph(g, 1)
        assert list(pa.members(0)) == list(range(5))

    def test_more_partitions_than_vertices(self):
        g = graph_from_pairs([(0, 1), (1, 2)])
        pa = partition_graph(g, 8)
        nonempty = [p for p in range(8) if len(pa.members(p))]
        assert len(nonempty) == 3

    def test_zero_partitions_rejected(self):
        g = graph_from_pairs([(0, 1)])
        with pytest.raises(ValueError):
            partition_graph(g, 0)

    @given(v=st.integers(1, 200), n=st.integers(1, 32))
    @settings(max_examples=50, deadline=None)
    def test_total_and_balanced(self, v, n):
        pairs = [(i, (i + 1) % v) for i in range(v)] if v > 1 else [(0, 1)]
        g = graph_from_pairs(pairs)
        pa = partition_graph(g, n)
        assert len(pa.vertex_to_partition) == g.vertex_count
        assert np.all((pa.vertex_to_partition >= 0)
                      & (pa.vertex_to_partition < n))
        sizes = [len(pa.members(p)) for p in range(n)]
        assert max(sizes) - min(sizes) <= 1


class MaxPropagation:
    """Copy-max program: vertices push their running maximum to in-neighbors
    and halt until a larger value arrives."""

    def init(self, v, g):
        return v

    def combine(self, a, b):
        return max(a, b)

    def step(self, v, state, combined, g, ctx):
        new = max(state, combined) if combined is not None else state
        out = []
        if combined is None or new > state:
            out = [(int(u), new) for u in g.in_neighbors(v)]
        return new, out, True


class TestSupersteps:
    def test_max_propagation_on_path(self):
        g = graph_from_pairs([(0, 1), (1, 2)])
        states = run_supersteps(g, MaxPropagation(), max_iter=3)
        assert states == [2, 2, 2]

    def test_worker_invariance(self):
        g = graph_from_pairs([(0, 1), (1, 2), (2, 0), (2, 3), (3, 1)])
        base = run_supersteps(g, MaxPropagation(), max_iter=10, workers=1)
        for w in (2, 4, 8):
            assert run_supersteps(g, MaxPropagation(), max_iter=10,
                                  workers=w, partitions=w) == base

    def test_zero_iterations_returns_initial(self):
        g = graph_from_pairs([(0, 1)])
        states = run_supersteps(g, MaxPropagation(), max_iter=0)
        assert states == [0, 1]

    def test_negative_iterations_rejected(self):
        g = graph_from_pairs([(0, 1)])
        with pytest.raises(ValueError):
            run_supersteps(g, MaxPropagation(), max_iter=-1)

    def test_nonfinite_state_raises(self):
        from scflink.errors import SuperstepNumericError

        class Bad:
            def init(self, v, g):
                return 0.0

            def combine(self, a, b):
                return a + b

            def step(self, v, state, combined, g, ctx):
                return float("nan"), [], True

        g = graph_from_pairs([(0, 1)])
        with pytest.raises(SuperstepNumericError) as exc:
            run_supersteps(g, Bad(), max_iter=3)
        assert exc.value.superstep == 1
