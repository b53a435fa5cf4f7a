import numpy as np
import pytest

from rgmpnn.cmpnn import (
    ReferenceCache,
    cmpnn_forward,
    cmpnn_pool,
    continuous_aggregate,
    reference_from_large_graph,
)
from rgmpnn.errors import DegenerateDegreeError, UnsupportedSignalError
from rgmpnn.experiments import mean_aggregation_net
from rgmpnn.kernels import Kernel, RandomGraphModel, sample_graph, subsample_graph
from rgmpnn.mpnn import MPNNLayer, MPNNSpec, affine_mlp, gmpnn_forward, graphsage_random, mlp_forward
from rgmpnn.quadrature import QuadratureSpec, quadrature_from_dict, quadrature_nodes
from rgmpnn.signals import constant_signal, coordinate_signal, noise_signal, product_signal
from rgmpnn.space import UNIT_SQUARE

MC = QuadratureSpec.monte_carlo(4096, 1)


class TestQuadrature:
    def test_grid_midpoints(self):
        nodes = quadrature_nodes(QuadratureSpec.grid(4), UNIT_SQUARE)
        assert nodes.shape == (16, 2)
        assert nodes.min() == 0.125 and nodes.max() == 0.875

    def test_monte_carlo_seeded(self):
        a = quadrature_nodes(QuadratureSpec.monte_carlo(10, 3), UNIT_SQUARE)
        np.testing.assert_array_equal(a, quadrature_nodes(QuadratureSpec.monte_carlo(10, 3), UNIT_SQUARE))

    def test_dict_round_trip(self):
        for q in (QuadratureSpec.grid(8), QuadratureSpec.monte_carlo(100, 4)):
            assert quadrature_from_dict(q.to_dict()) == q

    def test_counts_positive(self):
        with pytest.raises(ValueError):
            QuadratureSpec.monte_carlo(0, 1)


class TestContinuousAggregate:
    def test_constant_kernel_constant_signal(self):
        phi = affine_mlp(np.random.default_rng(0).normal(size=(3, 4)), [0.5, -1.0, 2.0])
        s = constant_signal([0.3, -0.7])
        got = continuous_aggregate(Kernel.constant(2.0), s, phi, [0.2, 0.9], MC)
        np.testing.assert_allclose(got, mlp_forward(phi, [0.3, -0.7, 0.3, -0.7]), atol=1e-12)

    def test_zero_message(self):
        phi = affine_mlp(np.zeros((2, 2)))
        got = continuous_aggregate(Kernel.ball(0.3), product_signal(), phi, [0.5, 0.5], MC)
        np.testing.assert_array_equal(got, [0.0, 0.0])

    def test_unit_message_cancels_degree(self):
        phi = affine_mlp(np.zeros((1, 2)), [1.0])
        for k in (Kernel.ball(0.2), Kernel.smoothed_ball(0.3, 0.1), Kernel.constant(0.3)):
            for x in ([0.5, 0.5], [0.0, 0.0], [0.9, 0.2]):
                assert continuous_aggregate(k, product_signal(), phi, x, MC)[0] == 1.0

    def test_centered_disc_mean(self):
        phi = affine_mlp([[0.0, 1.0]])
        got = continuous_aggregate(
            Kernel.ball(0.1), coordinate_signal(0), phi, [0.5, 0.5], QuadratureSpec.monte_carlo(10**6, 2)
        )
        assert got[0] == pytest.approx(0.5, abs=2e-3)

    def test_degenerate_degree(self):
        phi = affine_mlp([[0.0, 1.0]])
        with pytest.raises(DegenerateDegreeError):
            continuous_aggregate(Kernel.ball(0.01), product_signal(), phi, [0.5, 0.5], QuadratureSpec.grid(2))

    def test_noise_refused(self):
        with pytest.raises(UnsupportedSignalError):
            continuous_aggregate(Kernel.constant(1.0), noise_signal(), affine_mlp([[0.0, 1.0]]), [0.5, 0.5], MC)


class TestForward:
    def test_identity_layer_constant_signal(self):
        net = mean_aggregation_net()
        out = cmpnn_forward(net, Kernel.constant(1.0), constant_signal(0.4), [[0.1, 0.1], [0.8, 0.3]], MC)
        np.testing.assert_allclose(out, [[0.4], [0.4]], atol=1e-12)

    def test_permutation_of_eval_points(self):
        net = graphsage_random([1, 4, 1], 0)
        pts = np.random.default_rng(3).random((5, 2))
        perm = np.array([3, 0, 4, 1, 2])
        quad = QuadratureSpec.monte_carlo(512, 7)
        k = Kernel.smoothed_ball(0.4, 0.1)
        out = cmpnn_forward(net, k, product_signal(), pts, quad)
        np.testing.assert_allclose(cmpnn_forward(net, k, product_signal(), pts[perm], quad), out[perm], atol=1e-12)

    def test_empty_eval_points(self):
        out = cmpnn_forward(graphsage_random([1, 3, 2], 0), Kernel.constant(1.0), product_signal(), np.zeros((0, 2)), MC)
        assert out.shape == (0, 2)

    def test_pool_is_mean_over_nodes(self):
        net = graphsage_random([1, 4, 1], 5)
        k = Kernel.smoothed_ball(0.4, 0.1)
        quad = QuadratureSpec.monte_carlo(300, 2)
        at_nodes = cmpnn_forward(net, k, product_signal(), quadrature_nodes(quad, UNIT_SQUARE), quad)
        np.testing.assert_allclose(cmpnn_pool(net, k, product_signal(), quad), at_nodes.mean(axis=0), atol=1e-15)


class TestPool:
    def test_constant_output_net(self):
        net = MPNNSpec((MPNNLayer(phi=affine_mlp([[0.0, 1.0]]), psi=affine_mlp(np.zeros((2, 2)), [1.5, -2.0])),))
        pooled = cmpnn_pool(net, Kernel.ball(0.5), product_signal(), QuadratureSpec.grid(16))
        np.testing.assert_array_equal(pooled, [1.5, -2.0])

    def test_grid_mean_of_product(self):
        pooled = cmpnn_pool(mean_aggregation_net(), Kernel.constant(1.0), product_signal(), QuadratureSpec.grid(64))
        assert pooled[0] == pytest.approx(0.25, abs=1e-12)

    def test_monte_carlo_spread(self):
        net = mean_aggregation_net()
        for seed in range(5):
            pooled = cmpnn_pool(net, Kernel.constant(1.0), product_signal(), QuadratureSpec.monte_carlo(4096, seed))
            assert pooled[0] == pytest.approx(0.25, abs=0.02)


class TestLargeGraphReference:
    @pytest.fixture
    def parent(self):
        return sample_graph(RandomGraphModel(Kernel.ball(0.3), product_signal()), 128, 3)

    def test_cache_hit(self, parent):
        net = graphsage_random([1, 4, 1], 1)
        cache = ReferenceCache()
        first = reference_from_large_graph(net, parent, cache)
        assert (net, parent) in cache
        assert reference_from_large_graph(net, parent, cache) is first
        np.testing.assert_array_equal(first, gmpnn_forward(net, parent))

    def test_read_only(self, parent):
        ref = reference_from_large_graph(graphsage_random([1, 4, 1], 1), parent, ReferenceCache())
        with pytest.raises(ValueError):
            ref[0, 0] = 0.0

    def test_clear(self, parent):
        net = graphsage_random([1, 4, 1], 1)
        cache = ReferenceCache()
        reference_from_large_graph(net, parent, cache)
        cache.clear()
        assert (net, parent) not in cache

    def test_constant_setup_matches_continuum(self):
        parent = sample_graph(RandomGraphModel(Kernel.constant(1.0), constant_signal(0.6)), 64, 0)
        ref = reference_from_large_graph(mean_aggregation_net(), parent, ReferenceCache())
        cont = cmpnn_forward(mean_aggregation_net(), Kernel.constant(1.0), constant_signal(0.6), parent.nodes, MC)
        np.testing.assert_allclose(ref, cont, atol=1e-12)

    def test_subsample_rows(self, parent):
        net = graphsage_random([1, 4, 1], 1)
        ref = reference_from_large_graph(net, parent, ReferenceCache())
        sub, idx = subsample_graph(parent, 32, 4)
        np.testing.assert_array_equal(ref[idx], gmpnn_forward(net, parent)[idx])
        np.testing.assert_array_equal(sub.nodes, parent.nodes[idx])
