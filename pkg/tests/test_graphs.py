import math

import numpy as np
import pytest

from stressgraph.data import ElectrodeLayout, GraphConfig, Trial
from stressgraph.graphs import (
    Adjacency,
    functional_adjacency,
    fuse_adjacency,
    graph_metrics,
    pearson,
    pearson_matrix,
    renormalize,
    structural_adjacency,
    symmetric_eigenvalues,
)


def line_layout(xs):
    return ElectrodeLayout(
        names=tuple(f"C{i}" for i in range(len(xs))),
        positions=np.column_stack([np.asarray(xs, dtype=float), np.zeros(len(xs))]),
    )


def random_layout(rng, n):
    return ElectrodeLayout(
        names=tuple(f"C{i}" for i in range(n)),
        positions=rng.uniform(-1, 1, size=(n, 2)),
    )


def adjacency_from_support(support):
    return Adjacency(weights=np.asarray(support, dtype=float), kind="fused")


class TestPearson:
    def test_perfect_positive(self):
        assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0, abs=1e-12)

    def test_perfect_negative(self):
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0, abs=1e-12)

    def test_zero_variance_convention(self):
        assert pearson([0, 0, 0], [1, 2, 3]) == 0.0

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            pearson([1, 2], [1, 2, 3])

    def test_exactly_half(self):
        # Both vectors are exactly zero-mean; cov=1, var product=4, so rho=0.5 exactly.
        assert pearson([1.0, 0.0, -1.0], [1.0, -1.0, 0.0]) == 0.5

    def test_matrix_agrees_with_pairwise(self):
        rng = np.random.default_rng(0)
        sig = rng.standard_normal((5, 40))
        rho = pearson_matrix(sig)
        for i in range(5):
            for j in range(5):
                assert rho[i, j] == pytest.approx(pearson(sig[i], sig[j]), abs=1e-12)


class TestStructural:
    def test_two_electrodes_at_distance_two(self):
        a = structural_adjacency(line_layout([0.0, 2.0]), GraphConfig(k=1, epsilon=1e-12))
        assert a.weights[0, 1] == pytest.approx(0.5, abs=1e-9)
        assert a.weights[0, 0] == 0.0 and a.weights[1, 1] == 0.0

    def test_three_collinear_k1(self):
        # Exhaustive pairwise oracle: distances 0-1:1, 1-2:1, 0-2:2; with k=1 the
        # middle node picks node 0 (tie broken by lower index), outer nodes pick
        # the middle. Union support: edges (0,1) and (1,2) only.
        eps = 1e-9
        a = structural_adjacency(line_layout([0.0, 1.0, 2.0]), GraphConfig(k=1, epsilon=eps))
        assert a.weights[0, 1] == pytest.approx(1.0, abs=1e-6)
        assert a.weights[1, 2] == pytest.approx(1.0, abs=1e-6)
        assert a.weights[0, 2] == 0.0

    def test_coincident_electrodes_bounded_by_epsilon(self):
        a = structural_adjacency(line_layout([0.5, 0.5]), GraphConfig(k=1, epsilon=1e-6))
        assert a.weights[0, 1] == pytest.approx(1e6, rel=1e-12)

    def test_k_must_be_below_n(self):
        with pytest.raises(ValueError):
            structural_adjacency(line_layout([0.0, 1.0]), GraphConfig(k=2))

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(7)
        for trial in range(10):
            n = int(rng.integers(3, 9))
            k = int(rng.integers(1, n - 1))
            layout = random_layout(rng, n)
            config = GraphConfig(k=k)
            a = structural_adjacency(layout, config)
            # independent oracle: full sort of (distance, index) pairs per node
            pos = layout.positions
            expected = np.zeros((n, n))
            for i in range(n):
                ranked = sorted(
                    range(n),
                    key=lambda j: (float(np.linalg.norm(pos[i] - pos[j])), j),
                )
                ranked.remove(i)
                for j in ranked[:k]:
                    w = 1.0 / (float(np.linalg.norm(pos[i] - pos[j])) + config.epsilon)
                    expected[i, j] = expected[j, i] = w
            assert np.allclose(a.weights, expected, atol=1e-12)

    def test_min_degree_at_least_k(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(4, 12))
            k = int(rng.integers(1, n - 1))
            a = structural_adjacency(random_layout(rng, n), GraphConfig(k=k))
            degrees = (a.weights > 0).sum(axis=1)
            assert degrees.min() >= k


class TestFunctional:
    def test_identical_channels_connected(self):
        sig = np.vstack([np.array([1.0, 2.0, 3.0, 1.0]), np.array([1.0, 2.0, 3.0, 1.0])])
        a = functional_adjacency(Trial(id="t", signal=sig, label=0), GraphConfig())
        assert a.weights[0, 1] == 1.0
        assert a.weights[0, 0] == 0.0

    def test_threshold_is_strict(self):
        # rho(ch0, ch1) is exactly 0.5 (see TestPearson), so no edge at tau=0.5.
        sig = np.vstack([[1.0, 0.0, -1.0], [1.0, -1.0, 0.0]])
        a = functional_adjacency(Trial(id="t", signal=sig, label=0), GraphConfig(tau=0.5))
        assert a.weights[0, 1] == 0.0

    def test_independent_noise_rarely_connected(self):
        # Monte Carlo over 100 seeds: 8 channels of independent noise at T=3200
        # should essentially never cross tau=0.5.
        edges = 0
        pairs = 0
        for seed in range(100):
            rng = np.random.default_rng(1000 + seed)
            sig = rng.standard_normal((8, 3200))
            a = functional_adjacency(Trial(id="t", signal=sig, label=0), GraphConfig())
            edges += int(a.weights.sum()) // 2
            pairs += 8 * 7 // 2
        assert edges / pairs < 0.01

    def test_affine_invariance_positive_scale(self):
        rng = np.random.default_rng(5)
        sig = rng.standard_normal((6, 120))
        trial = Trial(id="t", signal=sig, label=0)
        scaled = Trial(id="t", signal=sig * 3.7 + 11.0, label=0)
        cfg = GraphConfig(tau=0.3)
        assert np.array_equal(
            functional_adjacency(trial, cfg).weights,
            functional_adjacency(scaled, cfg).weights,
        )


class TestFuse:
    def test_elementwise_average(self):
        s = adjacency_from_support([[0, 1.0], [1.0, 0]])
        s = Adjacency(weights=s.weights, kind="structural")
        f = Adjacency(weights=np.array([[0.0, 1.0], [1.0, 0.0]]), kind="functional")
        fused = fuse_adjacency(s, f)
        assert fused.weights[0, 1] == 1.0

    def test_arithmetic_cases(self):
        s = Adjacency(weights=np.array([[0.0, 0.5], [0.5, 0.0]]), kind="structural")
        f = Adjacency(weights=np.array([[0.0, 0.0], [0.0, 0.0]]), kind="functional")
        fused = fuse_adjacency(s, f)
        assert fused.weights[0, 1] == 0.25
        assert fused.weights[0, 0] == 0.0

    def test_dimension_mismatch_rejected(self):
        s = Adjacency(weights=np.zeros((3, 3)), kind="structural")
        f = Adjacency(weights=np.zeros((2, 2)), kind="functional")
        with pytest.raises(ValueError):
            fuse_adjacency(s, f)

    def test_fused_bounds(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            n = int(rng.integers(3, 8))
            layout = random_layout(rng, n)
            trial = Trial(id="t", signal=rng.standard_normal((n, 50)), label=0)
            cfg = GraphConfig(k=1, tau=0.3)
            s = structural_adjacency(layout, cfg)
            f = functional_adjacency(trial, cfg)
            fused = fuse_adjacency(s, f)
            assert np.all(fused.weights >= 0)
            assert fused.weights.max() <= (s.weights.max() + 1.0) / 2.0 + 1e-15


class TestRenormalize:
    def test_empty_graph_gives_identity(self):
        out = renormalize(adjacency_from_support(np.zeros((2, 2))))
        assert np.array_equal(out.weights, np.eye(2))

    def test_two_node_complete_graph(self):
        # Hand computation: A+I = [[1,1],[1,1]], degrees (2,2), so every entry
        # becomes 1/sqrt(2)/sqrt(2) = 0.5.
        out = renormalize(adjacency_from_support([[0, 1], [1, 0]]))
        assert np.allclose(out.weights, 0.5 * np.ones((2, 2)), atol=1e-15)

    def test_output_exactly_symmetric(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            n = int(rng.integers(2, 9))
            raw = rng.uniform(0, 2, size=(n, n))
            w = (raw + raw.T) / 2.0
            np.fill_diagonal(w, 0.0)
            out = renormalize(Adjacency(weights=w, kind="fused"))
            assert np.array_equal(out.weights, out.weights.T)
            assert np.all(out.weights >= 0)

    def test_regular_graph_rows_sum_to_one(self):
        # Ring graph: every node has degree 2, so renormalized rows sum to 1.
        n = 6
        ring = np.zeros((n, n))
        for i in range(n):
            ring[i, (i + 1) % n] = ring[(i + 1) % n, i] = 1.0
        out = renormalize(adjacency_from_support(ring))
        assert np.allclose(out.weights.sum(axis=1), np.ones(n), atol=1e-12)


class TestEigenvalues:
    def test_diagonal_matrix(self):
        assert np.allclose(symmetric_eigenvalues(np.diag([3.0, 1.0, 2.0])), [1, 2, 3])

    def test_two_by_two_known_spectrum(self):
        got = symmetric_eigenvalues(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(got, [-1.0, 1.0], atol=1e-12)

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            symmetric_eigenvalues(np.array([[0.0, 1.0], [0.5, 0.0]]))

    def test_trace_identity_random(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            raw = rng.standard_normal((10, 10))
            m = (raw + raw.T) / 2.0
            eigs = symmetric_eigenvalues(m)
            assert abs(eigs.sum() - np.trace(m)) < 1e-9

    def test_matches_numpy_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            n = int(rng.integers(2, 12))
            raw = rng.standard_normal((n, n))
            m = (raw + raw.T) / 2.0
            assert np.allclose(symmetric_eigenvalues(m), np.linalg.eigvalsh(m), atol=1e-8)


class TestGraphMetrics:
    def test_complete_graph_k4(self):
        k4 = np.ones((4, 4)) - np.eye(4)
        m = graph_metrics(adjacency_from_support(k4))
        assert m.algebraic_connectivity == pytest.approx(4.0, abs=1e-8)
        assert m.avg_clustering == pytest.approx(1.0, abs=1e-12)
        assert m.avg_shortest_path == pytest.approx(1.0, abs=1e-12)
        assert m.avg_degree == pytest.approx(3.0, abs=1e-12)

    def test_path_p3(self):
        p3 = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
        # Independent oracle for lambda_2: numpy eigendecomposition of L(P3),
        # whose spectrum is {0, 1, 3}.
        laplacian = np.diag(p3.sum(axis=1)) - p3
        oracle = np.sort(np.linalg.eigvalsh(laplacian))
        assert oracle[1] == pytest.approx(1.0, abs=1e-9)
        m = graph_metrics(adjacency_from_support(p3))
        assert m.algebraic_connectivity == pytest.approx(oracle[1], abs=1e-8)
        assert m.avg_clustering == 0.0
        assert m.avg_shortest_path == pytest.approx(4.0 / 3.0, abs=1e-12)
        assert m.avg_degree == pytest.approx(4.0 / 3.0, abs=1e-12)

    def test_disconnected_graph(self):
        two_edges = np.zeros((4, 4))
        two_edges[0, 1] = two_edges[1, 0] = 1.0
        two_edges[2, 3] = two_edges[3, 2] = 1.0
        m = graph_metrics(adjacency_from_support(two_edges))
        assert m.algebraic_connectivity == 0.0
        assert math.isinf(m.avg_shortest_path)

    def test_metric_ranges_random_graphs(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            n = int(rng.integers(3, 10))
            raw = (rng.random((n, n)) < 0.4).astype(float)
            support = np.maximum(raw, raw.T)
            np.fill_diagonal(support, 0.0)
            m = graph_metrics(adjacency_from_support(support))
            assert 0.0 <= m.avg_clustering <= 1.0
            assert m.avg_degree <= n - 1
            assert m.algebraic_connectivity <= n + 1e-9

    def test_weighted_path_mode(self):
        # Two nodes joined by an edge of weight 4: hop distance 1, weighted 1/4.
        w = np.array([[0.0, 4.0], [4.0, 0.0]])
        a = Adjacency(weights=w, kind="fused")
        assert graph_metrics(a).avg_shortest_path == 1.0
        assert graph_metrics(a, weighted_paths=True).avg_shortest_path == 0.25


class TestAdjacencyInvariants:
    def test_random_pipeline_contracts(self):
        rng = np.random.default_rng(33)
        for _ in range(25):
            n = int(rng.integers(3, 10))
            layout = random_layout(rng, n)
            trial = Trial(id="t", signal=rng.standard_normal((n, 60)), label=0)
            cfg = GraphConfig(k=int(rng.integers(1, n - 1)), tau=0.4)
            s = structural_adjacency(layout, cfg)
            f = functional_adjacency(trial, cfg)
            fused = fuse_adjacency(s, f)
            for a in (s, f, fused):
                assert np.array_equal(a.weights, a.weights.T)
                assert np.all(np.diag(a.weights) == 0)
            assert set(np.unique(f.weights)).issubset({0.0, 1.0})
            assert np.array_equal(fused.weights, (s.weights + f.weights) / 2.0)

    def test_kind_validation(self):
        with pytest.raises(ValueError):
            Adjacency(weights=np.zeros((2, 2)), kind="mystery")
        with pytest.raises(ValueError):
            Adjacency(weights=np.array([[0.0, 1.0], [0.0, 0.0]]), kind="fused")
        with pytest.raises(ValueError):
            Adjacency(weights=np.eye(2), kind="functional")
