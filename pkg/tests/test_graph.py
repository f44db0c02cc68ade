import io
import math

import numpy as np
import pytest

import bivirus as bv
from conftest import random_connected_graph


class TestLoadEdgeList:
    def test_path_graph(self):
        g = bv.load_edge_list("0 1\n1 2")
        assert g.n == 3
        assert len(g.edges) == 2
        assert g.labels == ("0", "1", "2")

    def test_duplicates_and_comments_collapse(self):
        g = bv.load_edge_list("a b\nb a\n# comment\nb c")
        assert g.n == 3
        assert len(g.edges) == 2

    def test_blank_lines_and_file_object(self):
        g = bv.load_edge_list(io.StringIO("\n0 1\n\n1 2\n"))
        assert g.n == 3

    def test_self_loop_rejected_with_line_number(self):
        with pytest.raises(bv.GraphFormatError) as err:
            bv.load_edge_list("0 1\n1 1\n1 2")
        assert err.value.line == 2

    def test_disconnected_names_two_nodes(self):
        with pytest.raises(bv.GraphFormatError) as err:
            bv.load_edge_list("a b\nc d")
        message = str(err.value)
        assert "'a'" in message and "'c'" in message

    def test_empty_input_rejected(self):
        with pytest.raises(bv.GraphFormatError):
            bv.load_edge_list("# only a comment\n")

    def test_three_tokens_rejected(self):
        with pytest.raises(bv.GraphFormatError) as err:
            bv.load_edge_list("0 1 2")
        assert err.value.line == 1

    def test_round_trip(self):
        text = "a b\nb c\nc a"
        g = bv.load_edge_list(text)
        again = bv.load_edge_list(g.to_edge_list())
        assert again.labels == g.labels
        assert again.edges == g.edges


class TestDegrees:
    def test_complete(self):
        assert bv.degrees(bv.complete_graph(5)) == (4, 4)

    def test_star(self):
        assert bv.degrees(bv.star_graph(4)) == (1, 3)

    def test_connectivity_implies_positive_min_degree(self):
        rng = np.random.default_rng(5)
        for _ in range(5):
            g = random_connected_graph(12, rng)
            d_min, d_max = bv.degrees(g)
            assert d_max >= d_min >= 1


class TestPfEigen:
    def test_complete_graph_value(self):
        spec = bv.pf_eigen(bv.complete_graph(5).adjacency)
        assert spec.value == pytest.approx(4.0, abs=1e-9)

    def test_star_matches_dense_eigensolve_oracle(self):
        adj = bv.star_graph(4).adjacency
        oracle = float(np.max(np.linalg.eigvalsh(adj)))
        spec = bv.pf_eigen(adj)
        assert spec.value == pytest.approx(oracle, abs=1e-9)
        assert spec.value == pytest.approx(math.sqrt(3), abs=1e-9)

    def test_metzler_shift_matches_oracle(self):
        # beta*A - delta*I on K5 with beta = delta = 1
        adj = bv.complete_graph(5).adjacency
        mat = adj - np.eye(5)
        oracle = float(np.max(np.linalg.eigvalsh(mat)))
        spec = bv.pf_eigen(mat)
        assert spec.value == pytest.approx(3.0, abs=1e-9)
        assert spec.value == pytest.approx(oracle, abs=1e-9)

    def test_residual_invariant(self):
        adj = bv.cycle_graph(7).adjacency
        spec = bv.pf_eigen(adj, tol=1e-12)
        resid = np.max(np.abs(adj @ spec.vector - spec.value * spec.vector))
        assert resid <= 1e-12
        assert spec.residual == pytest.approx(resid, abs=1e-15)

    def test_rayleigh_bounds_on_random_graphs(self):
        rng = np.random.default_rng(17)
        for n in (8, 20, 50):
            g = random_connected_graph(n, rng)
            d_min, d_max = bv.degrees(g)
            value = bv.pf_eigen(g.adjacency).value
            assert d_min - 1e-9 <= value <= d_max + 1e-9

    def test_shift_equivariance_random_metzler(self):
        rng = np.random.default_rng(23)
        tol = 1e-10
        for n in (4, 9, 20):
            g = random_connected_graph(n, rng)
            mat = g.adjacency + np.diag(rng.uniform(-2.0, 2.0, n))
            shift = float(rng.uniform(-3.0, 3.0))
            base = bv.pf_eigen(mat, tol=tol).value
            shifted = bv.pf_eigen(mat + shift * np.eye(n), tol=tol).value
            assert shifted == pytest.approx(base + shift, abs=2 * tol)

    def test_eigenvector_positive(self):
        rng = np.random.default_rng(31)
        for n in (5, 12):
            g = random_connected_graph(n, rng)
            vec = bv.pf_eigen(g.adjacency).vector
            assert np.all(vec > 0)
            assert np.max(vec) == pytest.approx(1.0)

    def test_reducible_pattern_rejected(self):
        mat = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(bv.SpectralError):
            bv.pf_eigen(mat)

    def test_negative_offdiagonal_rejected(self):
        mat = np.array([[0.0, -1.0], [-1.0, 0.0]])
        with pytest.raises(bv.SpectralError):
            bv.pf_eigen(mat)

    def test_nonconvergence_carries_residual(self):
        # star is non-regular, so the all-ones start is not the eigenvector
        adj = bv.star_graph(4).adjacency
        with pytest.raises(bv.SpectralError) as err:
            bv.pf_eigen(adj, tol=1e-14, max_iter=2)
        assert err.value.residual is not None
        assert err.value.residual > 0


class TestGraphValidation:
    def test_asymmetric_rejected(self):
        adj = np.array([[0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(bv.GraphFormatError):
            bv.Graph(adj)

    def test_self_loop_rejected(self):
        adj = np.array([[1.0, 1.0], [1.0, 0.0]])
        with pytest.raises(bv.GraphFormatError):
            bv.Graph(adj)

    def test_adjacency_read_only(self):
        g = bv.cycle_graph(4)
        with pytest.raises(ValueError):
            g.adjacency[0, 1] = 5.0
