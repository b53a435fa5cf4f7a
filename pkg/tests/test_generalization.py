import math

import numpy as np
import pytest

from rgmpnn.bounds import ClassDistribution, ClassSpec, NodeLaw
from rgmpnn.errors import InvalidArgumentError, OutputDimensionError, RepresentativenessError
from rgmpnn.generalization import (
    GapConfig,
    cross_entropy,
    empirical_risk,
    run_generalization,
    sample_training_set,
    statistical_risk,
)
from rgmpnn.kernels import Kernel
from rgmpnn.mpnn import MPNNLayer, MPNNSpec, affine_mlp, message_selector
from rgmpnn.signals import constant_signal, product_signal


def two_classes(law=None):
    return ClassDistribution(
        (
            ClassSpec(Kernel.ball(0.4), product_signal(), 0.5),
            ClassSpec(Kernel.constant(0.5), constant_signal(0.5), 0.5),
        ),
        law or NodeLaw.fixed(64),
    )


def smooth_classes():
    return ClassDistribution(
        (
            ClassSpec(Kernel.smoothed_ball(0.5, 0.25), product_signal(), 0.5),
            ClassSpec(Kernel.constant(1.0), constant_signal(0.2), 0.5),
        ),
        NodeLaw.fixed(32),
    )


def zero_net(classes=2):
    return MPNNSpec((MPNNLayer(phi=message_selector(1), psi=affine_mlp(np.zeros((classes, 2)))),))


class TestTrainingSet:
    def test_class_counts(self):
        training = sample_training_set(two_classes(), 10, 0)
        labels = [y for _, y in training]
        assert labels.count(0) == 5 and labels.count(1) == 5

    def test_fixed_node_law(self):
        assert all(g.n == 64 for g, _ in sample_training_set(two_classes(), 4, 1))

    def test_node_law_range(self):
        training = sample_training_set(two_classes(NodeLaw.uniform_range(8, 12)), 20, 2)
        assert {g.n for g, _ in training} <= set(range(8, 13))

    def test_deterministic(self):
        a = sample_training_set(two_classes(), 4, 7)
        b = sample_training_set(two_classes(), 4, 7)
        for (ga, ya), (gb, yb) in zip(a, b):
            assert ya == yb
            np.testing.assert_array_equal(ga.nodes, gb.nodes)

    def test_representativeness(self):
        with pytest.raises(RepresentativenessError):
            sample_training_set(two_classes(), 3, 0)


class TestLoss:
    def test_uniform_logits(self):
        assert cross_entropy([0.0, 0.0, 0.0], 1, 3) == pytest.approx(math.log(3))

    def test_extra_outputs_ignored(self):
        assert cross_entropy([0.0, 0.0, 50.0], 0, 2) == pytest.approx(math.log(2))

    def test_large_logits_stable(self):
        loss = cross_entropy([1000.0, 0.0], 0, 2)
        assert math.isfinite(loss)
        assert loss == pytest.approx(0.0, abs=1e-12)

    def test_single_class_exact_zero(self):
        assert cross_entropy([3.7], 0, 1) == 0.0

    def test_too_few_outputs(self):
        with pytest.raises(OutputDimensionError):
            cross_entropy([0.0], 0, 2)

    def test_label_range(self):
        with pytest.raises(InvalidArgumentError):
            cross_entropy([0.0, 0.0], 2, 2)


class TestRisk:
    def test_zero_net_empirical(self):
        training = sample_training_set(two_classes(), 4, 0)
        assert empirical_risk(zero_net(), training, 2) == pytest.approx(math.log(2))

    def test_zero_net_statistical(self):
        assert statistical_risk(zero_net(), two_classes(), 20, 0) == pytest.approx(math.log(2))

    def test_empty_training(self):
        with pytest.raises(InvalidArgumentError):
            empirical_risk(zero_net(), [], 2)

    def test_output_dim(self):
        with pytest.raises(OutputDimensionError):
            statistical_risk(zero_net(1), two_classes(), 10, 0)


class TestRun:
    def test_single_class_zero_gap(self):
        dist = ClassDistribution((ClassSpec(Kernel.constant(1.0), product_signal(), 1.0),), NodeLaw.fixed(32))
        res = run_generalization(GapConfig(dist, m=4, trials=2, mc_size=40, dims=[1, 4, 1]))
        assert res.r_exp == 0.0
        assert [row.sq_gap for row in res.rows] == [0.0, 0.0]
        assert res.bound_status == "ok"
        assert math.isfinite(res.bound.value)

    def test_rows_and_bound(self):
        cfg = GapConfig(smooth_classes(), m=4, trials=3, mc_size=40, dims=[1, 4, 2], seed=3)
        res = run_generalization(cfg)
        assert [row.trial for row in res.rows] == [0, 1, 2]
        assert all(row.r_exp == res.r_exp for row in res.rows)
        assert all(row.bound == res.bound.value for row in res.rows)
        assert res.summary()["m"] == 4

    def test_deterministic(self):
        cfg = GapConfig(smooth_classes(), m=4, trials=2, mc_size=40, dims=[1, 4, 2], seed=3)
        assert run_generalization(cfg).rows == run_generalization(cfg).rows

    def test_statement_exponent_larger(self):
        base = dict(m=4, trials=1, mc_size=40, dims=[1, 4, 2], seed=1)
        loose = run_generalization(GapConfig(smooth_classes(), statement_exponent=True, **base))
        tight = run_generalization(GapConfig(smooth_classes(), **base))
        assert loose.bound.value >= tight.bound.value
        assert loose.bound.leading == tight.bound.leading

    def test_ball_class_bound_unavailable(self):
        res = run_generalization(GapConfig(two_classes(), m=2, trials=1, mc_size=20, dims=[1, 4, 2]))
        assert res.bound is None
        assert res.bound_status.startswith("unavailable")
        assert math.isnan(res.rows[0].bound)

    def test_net_override(self):
        res = run_generalization(GapConfig(two_classes(), m=2, trials=1, mc_size=20), net=zero_net())
        assert res.rows[0].r_emp == pytest.approx(math.log(2))
        assert res.rows[0].sq_gap == pytest.approx(0.0, abs=1e-24)

    def test_output_dim_checked(self):
        with pytest.raises(OutputDimensionError):
            run_generalization(GapConfig(two_classes(), m=2, trials=1, mc_size=20, dims=[1, 4, 1]))

    @pytest.mark.parametrize(
        "kw",
        [{"mc_size": 19}, {"m": 0}, {"loss_lipschitz": 0.0}, {"m": 3, "mc_size": 30}],
    )
    def test_validation(self, kw):
        base = {"m": 2, "trials": 1, "mc_size": 20}
        base.update(kw)
        with pytest.raises((InvalidArgumentError, RepresentativenessError)):
            run_generalization(GapConfig(two_classes(), **base))
