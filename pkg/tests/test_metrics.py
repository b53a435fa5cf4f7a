import math

import numpy as np
import pytest

from rgmpnn.errors import InvalidArgumentError, UnsupportedSignalError
from rgmpnn.metrics import (
    ErrorRecord,
    dist_pooled,
    dist_x,
    fit_loglog_slope,
    norm_2inf,
    sample_signal,
    sup_norm,
)
from rgmpnn.signals import noise_signal, product_signal


class TestNorms:
    def test_sup_norm(self):
        assert sup_norm([1.0, -3.0, 2.0]) == 3.0
        assert sup_norm(np.zeros(4)) == 0.0
        v = np.array([0.5, -1.5, 1.0])
        assert sup_norm(-2 * v) == 2 * sup_norm(v)

    def test_norm_2inf_constant_rows(self):
        assert norm_2inf(np.full((5, 3), -0.7)) == pytest.approx(0.7, rel=1e-15)

    def test_norm_2inf_two_rows(self):
        assert norm_2inf([[0.0], [2.0]]) == pytest.approx(math.sqrt(2.0), rel=1e-15)

    def test_norm_2inf_row_sup(self):
        assert norm_2inf([[3.0, -4.0]]) == 4.0

    def test_norm_2inf_permutation(self):
        m = np.random.default_rng(0).normal(size=(7, 2))
        assert norm_2inf(m[::-1]) == pytest.approx(norm_2inf(m), rel=1e-15)

    def test_empty(self):
        with pytest.raises(InvalidArgumentError):
            norm_2inf(np.zeros((0, 2)))
        with pytest.raises(InvalidArgumentError):
            sup_norm([])


class TestSampling:
    def test_product(self):
        np.testing.assert_array_equal(sample_signal(product_signal(), [[0, 0], [1, 1]]), [[0.0], [1.0]])

    def test_empty(self):
        assert sample_signal(product_signal(), []).shape == (0, 1)

    def test_idempotent(self):
        pts = np.random.default_rng(1).random((10, 2))
        np.testing.assert_array_equal(sample_signal(product_signal(), pts), sample_signal(product_signal(), pts))

    def test_noise_refused(self):
        with pytest.raises(UnsupportedSignalError):
            sample_signal(noise_signal(), [[0.5, 0.5]])


class TestDistances:
    def test_identical(self):
        m = np.random.default_rng(2).normal(size=(4, 2))
        assert dist_x(m, m) == 0.0
        assert dist_pooled(m[0], m[0]) == 0.0

    def test_uniform_shift(self):
        m = np.random.default_rng(3).normal(size=(4, 2))
        assert dist_x(m + 0.25, m) == pytest.approx(0.25, rel=1e-12)

    def test_one_row_differs(self):
        assert dist_x([[1.0], [0.0]], [[0.0], [0.0]]) == pytest.approx(math.sqrt(0.5), rel=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            dist_x(np.zeros((2, 1)), np.zeros((3, 1)))
        with pytest.raises(InvalidArgumentError):
            dist_pooled([0.0], [0.0, 1.0])


class TestSlopeFit:
    def test_inverse_sqrt(self):
        ns = [2.0**k for k in range(5, 12)]
        fit = fit_loglog_slope(ns, [3.0 / math.sqrt(n) for n in ns])
        assert fit.slope == pytest.approx(-0.5, abs=1e-12)
        assert fit.residual == pytest.approx(0.0, abs=1e-10)

    def test_constant(self):
        assert fit_loglog_slope([2, 4, 8], [0.1, 0.1, 0.1]).slope == pytest.approx(0.0, abs=1e-12)

    def test_inverse(self):
        assert fit_loglog_slope([10, 100, 1000], [5 / 10, 5 / 100, 5 / 1000]).slope == pytest.approx(-1.0, abs=1e-12)

    def test_recovers_intercept(self):
        ns = [2.0**k for k in range(1, 9)]
        errs = [2.0**1.5 * n**-0.37 for n in ns]
        fit = fit_loglog_slope(ns, errs)
        assert fit.slope == pytest.approx(-0.37, abs=1e-10)
        assert fit.intercept == pytest.approx(1.5, abs=1e-10)

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidArgumentError):
            fit_loglog_slope([1, 2], [0.0, 1.0])
        with pytest.raises(InvalidArgumentError):
            fit_loglog_slope([1], [1.0])


class TestErrorRecord:
    def test_rejects_negative(self):
        with pytest.raises(InvalidArgumentError):
            ErrorRecord(n=4, trial=0, dist_value=-1.0, pooled_dist=0.0)
        assert ErrorRecord(n=4, trial=0, dist_value=0.5, pooled_dist=0.1).dist_value == 0.5
