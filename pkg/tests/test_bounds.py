import json
import math

import pytest

from rgmpnn.bounds import (
    ClassDistribution,
    ClassSpec,
    NodeLaw,
    SignalRegularity,
    bound_constants,
    bound_report,
    class_counts,
    deterministic_coefficients,
    deterministic_output_bound,
    epsilon_d,
    epsilon_w,
    expected_sq_bound,
    generalization_bound,
    lambda_tilde,
    layer_error_D,
    layer_factor_K,
    min_nodes,
    network_lipschitz_factor,
    node_bound_constants,
    node_law_from_dict,
    node_level_bound,
    pooled_bound,
    signal_regularity,
    signal_regularity_recursions,
    solve_recurrence,
    two_graph_bound,
)
from rgmpnn.errors import (
    ConditionViolatedError,
    InvalidArgumentError,
    NonLipschitzKernelError,
    NonLipschitzSignalError,
    RepresentativenessError,
)
from rgmpnn.kernels import Kernel, RegularityProfile, regularity_profile
from rgmpnn.mpnn import LayerConstants
from rgmpnn.signals import noise_signal, product_signal

SQRT2 = math.sqrt(2.0)
# log(2/p) = 1
P_UNIT_LOG = 2.0 / math.e
ZERO_LAYER = LayerConstants(0.0, 0.0, 0.0, 0.0)


def rough_layer(**kw):
    base = {"lip_phi": 1.5, "lip_psi": 0.8, "bias_phi": 0.3, "bias_psi": 0.2}
    base.update(kw)
    return LayerConstants(**base)


ROUGH_SIGNAL = SignalRegularity(sup_f=1.0, lip_f=SQRT2)


def remainder_base(layers, profile, sig):
    a_prime, a_dprime = deterministic_coefficients(layers, profile)
    consts = bound_constants(layers, profile, sig)
    return a_prime + a_dprime * sig.sup_f**2 + consts.B_prime + sig.sup_f * consts.B_dprime


class TestWorkedExample:
    def test_min_nodes(self, unit_profile):
        assert min_nodes(unit_profile, P_UNIT_LOG) == 8

    def test_radii(self, unit_profile, unit_layer, unit_signal):
        assert epsilon_d(unit_profile, P_UNIT_LOG) == pytest.approx(SQRT2, rel=1e-12)
        assert lambda_tilde(unit_layer, unit_signal, unit_profile) == 0.0
        assert epsilon_w(unit_layer, unit_signal, unit_profile, P_UNIT_LOG) == pytest.approx(2 * SQRT2, rel=1e-12)

    def test_layer_error_and_factor(self, unit_profile, unit_layer, unit_signal):
        assert layer_error_D(unit_layer, unit_signal, unit_profile, P_UNIT_LOG) == pytest.approx(10 * SQRT2, rel=1e-12)
        assert layer_factor_K(unit_layer, unit_profile) == pytest.approx(3.0, rel=1e-12)

    def test_grouped_constants(self, unit_profile, unit_layer, unit_signal):
        c1, c2, c3 = node_bound_constants([unit_layer], unit_profile, unit_signal)
        assert c1 == pytest.approx(0.0, abs=1e-12)
        assert c2 == pytest.approx(SQRT2, rel=1e-12)
        assert c3 == pytest.approx(10 * SQRT2, rel=1e-12)

    def test_node_bound_value(self, unit_profile, unit_layer, unit_signal):
        res = node_level_bound(10**4, P_UNIT_LOG, [unit_layer], unit_profile, unit_signal)
        assert res.coefficient == pytest.approx(10 * SQRT2, rel=1e-12)
        assert res.value == pytest.approx(0.1414, abs=1e-4)
        assert res.min_n == 8
        assert res.confidence == pytest.approx(1 - 3 * P_UNIT_LOG)

    def test_signal_recursion(self, unit_profile, unit_layer, unit_signal):
        rec = signal_regularity_recursions([unit_layer], unit_profile, unit_signal)
        assert rec.B_dprime == pytest.approx(3.0)
        assert rec.B_prime == 0.0
        assert rec.output.norm_bound == pytest.approx(3.0)

    def test_identity_layers_keep_norm(self, unit_profile, unit_signal):
        ident = LayerConstants(lip_phi=0.0, lip_psi=1.0, bias_phi=0.0, bias_psi=0.0)
        rec = signal_regularity_recursions([ident] * 4, unit_profile, unit_signal)
        assert rec.B_dprime == 1.0
        assert rec.B_prime == 0.0

    def test_lipschitz_factor(self, unit_profile, unit_layer):
        assert network_lipschitz_factor([unit_layer, unit_layer], unit_profile) == pytest.approx(9.0)

    def test_pooled_coefficient(self, unit_profile, unit_layer, unit_signal):
        res = pooled_bound(10**4, P_UNIT_LOG, [unit_layer], unit_profile, unit_signal)
        # pooled adds 2*sqrt(2)*(B' + B''*||f||) to the log part
        assert res.coefficient == pytest.approx(16 * SQRT2, rel=1e-12)
        assert res.confidence == pytest.approx(1 - 4 * P_UNIT_LOG)


class TestMinNodes:
    def test_constant_kernel(self):
        profile = regularity_profile(Kernel.constant(1.0))
        assert min_nodes(profile, 0.01) == 43

    def test_half_p(self, unit_profile):
        assert min_nodes(unit_profile, 0.5) == 12

    def test_decreases_with_p(self, rough_profile):
        ns = [min_nodes(rough_profile, p) for p in (0.001, 0.01, 0.1, 0.5)]
        assert ns == sorted(ns, reverse=True)
        assert ns[0] > ns[-1]

    def test_threshold_met(self, rough_profile):
        n = min_nodes(rough_profile, 0.05)
        node_level_bound(n, 0.05, [rough_layer()], rough_profile, ROUGH_SIGNAL)
        with pytest.raises(ConditionViolatedError):
            node_level_bound(n - 1, 0.05, [rough_layer()], rough_profile, ROUGH_SIGNAL)

    def test_ball_kernel_refused(self):
        profile = regularity_profile(Kernel.ball(0.3), grid_res=5)
        with pytest.raises(NonLipschitzKernelError):
            min_nodes(profile, 0.1)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_p_range(self, unit_profile, p):
        with pytest.raises(InvalidArgumentError):
            min_nodes(unit_profile, p)


class TestMonotonicity:
    def coeff(self, layer, profile, sig, p=0.05):
        return bound_constants([layer], profile, sig).coefficient(sig, p)

    def test_grows_with_psi(self, rough_profile):
        lo = self.coeff(rough_layer(lip_psi=0.5), rough_profile, ROUGH_SIGNAL)
        hi = self.coeff(rough_layer(lip_psi=1.0), rough_profile, ROUGH_SIGNAL)
        assert hi == pytest.approx(2 * lo, rel=1e-12)

    def test_grows_with_phi(self, rough_profile):
        assert self.coeff(rough_layer(lip_phi=2.0), rough_profile, ROUGH_SIGNAL) > self.coeff(
            rough_layer(lip_phi=1.0), rough_profile, ROUGH_SIGNAL
        )

    def test_grows_with_signal(self, rough_profile):
        smooth = SignalRegularity(1.0, 0.5)
        assert self.coeff(rough_layer(), rough_profile, ROUGH_SIGNAL) > self.coeff(rough_layer(), rough_profile, smooth)

    def test_shrinks_with_p(self, rough_profile):
        assert self.coeff(rough_layer(), rough_profile, ROUGH_SIGNAL, 0.01) > self.coeff(
            rough_layer(), rough_profile, ROUGH_SIGNAL, 0.2
        )

    def test_shrinks_with_dmin(self, rough_profile):
        wide = RegularityProfile(sup_w=1.0, lip_w=2.0, d_min=0.8, dim_chi=2.0, zeta=17.94)
        assert self.coeff(rough_layer(), rough_profile, ROUGH_SIGNAL) > self.coeff(rough_layer(), wide, ROUGH_SIGNAL)

    def test_lambda_active(self, rough_profile):
        assert lambda_tilde(rough_layer(), ROUGH_SIGNAL, rough_profile) > 0

    def test_zero_network(self, rough_profile):
        consts = bound_constants([ZERO_LAYER, ZERO_LAYER], rough_profile, ROUGH_SIGNAL)
        assert consts.coefficient(ROUGH_SIGNAL, 0.1) == 0.0
        assert consts.coefficient(ROUGH_SIGNAL, 0.1, pooled=True) == 0.0

    def test_non_lipschitz_signal(self, rough_profile):
        with pytest.raises(NonLipschitzSignalError):
            bound_constants([rough_layer()], rough_profile, SignalRegularity(1.0, math.inf))


class TestRecurrence:
    def test_two_steps(self):
        assert solve_recurrence([2.0, 2.0], [1.0, 1.0], 1.0) == 7.0

    def test_three_step_unrolling(self):
        a, b, eta0 = [2.0, 0.5, 3.0], [1.0, -1.0, 0.25], 0.7
        assert solve_recurrence(a, b, eta0) == a[2] * (a[1] * (a[0] * eta0 + b[0]) + b[1]) + b[2]

    def test_homogeneous(self):
        assert solve_recurrence([2.0, 3.0, 0.5], [0.0, 0.0, 0.0], 2.0) == pytest.approx(6.0)

    def test_single(self):
        assert solve_recurrence([4.0], [1.5], 0.5) == 3.5

    def test_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            solve_recurrence([1.0, 2.0], [1.0], 0.0)

    def test_closed_form_consistency(self, rough_profile):
        layers = [rough_layer(), rough_layer(lip_phi=0.7, bias_psi=0.0), rough_layer(lip_psi=1.3)]
        rec = signal_regularity_recursions(layers, rough_profile, ROUGH_SIGNAL)
        out = rec.output
        assert out.D1 == pytest.approx(rec.B_prime, rel=1e-12)
        assert out.D2 == pytest.approx(rec.B_dprime, rel=1e-12)
        assert out.norm_bound == pytest.approx(rec.B_prime + rec.B_dprime * ROUGH_SIGNAL.sup_f, rel=1e-12)
        lip = out.Z1 + out.Z2 * ROUGH_SIGNAL.sup_f + out.Z3 * ROUGH_SIGNAL.lip_f
        assert out.lip_bound == pytest.approx(lip, rel=1e-12)


class TestSignalRegularity:
    def test_product(self):
        sig = signal_regularity(product_signal())
        assert (sig.sup_f, sig.lip_f) == (1.0, SQRT2)
        assert sig.finite

    def test_noise_rejected(self, rough_profile):
        sig = signal_regularity(noise_signal(0.5))
        assert not sig.finite
        assert sig.to_dict() == {"sup_f": "inf", "lip_f": "inf"}
        with pytest.raises(NonLipschitzSignalError):
            signal_regularity_recursions([rough_layer()], rough_profile, sig)


class TestHighProbabilityBounds:
    def test_quartering(self, unit_profile, unit_layer, unit_signal):
        a = node_level_bound(1024, P_UNIT_LOG, [unit_layer], unit_profile, unit_signal)
        b = node_level_bound(4096, P_UNIT_LOG, [unit_layer], unit_profile, unit_signal)
        assert b.value == pytest.approx(a.value / 2, rel=1e-12)

    def test_two_graph(self, unit_profile, unit_layer, unit_signal):
        pooled = pooled_bound(100, P_UNIT_LOG, [unit_layer], unit_profile, unit_signal)
        both = two_graph_bound(100, 400, P_UNIT_LOG, [unit_layer], unit_profile, unit_signal)
        assert both.value == pytest.approx(pooled.value * 1.5, rel=1e-12)
        assert both.confidence == pytest.approx(1 - 8 * P_UNIT_LOG)
        assert both.confidence_as_printed == pytest.approx(1 - 2 * (3 * P_UNIT_LOG + 1))

    def test_two_graph_checks_smaller_graph(self, unit_profile, unit_layer, unit_signal):
        with pytest.raises(ConditionViolatedError) as exc:
            two_graph_bound(7, 400, P_UNIT_LOG, [unit_layer], unit_profile, unit_signal)
        assert exc.value.required == 8
        assert exc.value.n == 7


class TestExpectedSquare:
    def test_remainder_negligible(self, unit_profile, unit_layer, unit_signal):
        res = expected_sq_bound(4096, [unit_layer], unit_profile, unit_signal)
        assert 0 <= res.remainder < 1e-30
        assert res.leading == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-12)

    def test_inverse_n(self, unit_profile, unit_layer, unit_signal):
        a = expected_sq_bound(2048, [unit_layer], unit_profile, unit_signal)
        b = expected_sq_bound(8192, [unit_layer], unit_profile, unit_signal)
        assert b.leading == pytest.approx(a.leading / 4, rel=1e-12)

    def test_dominates_squared_pooled(self, unit_profile, unit_layer, unit_signal):
        for n in (12, 100, 4096):
            pooled = pooled_bound(n, 0.5, [unit_layer], unit_profile, unit_signal)
            assert expected_sq_bound(n, [unit_layer], unit_profile, unit_signal).value > pooled.value**2

    def test_statement_exponent(self, rough_profile):
        layers = [rough_layer()]
        a = expected_sq_bound(64, layers, rough_profile, ROUGH_SIGNAL)
        b = expected_sq_bound(64, layers, rough_profile, ROUGH_SIGNAL, statement_exponent=True)
        assert b.leading == a.leading
        assert b.remainder >= a.remainder

    def test_zero_network(self, unit_profile, unit_signal):
        res = expected_sq_bound(100, [ZERO_LAYER], unit_profile, unit_signal)
        assert res.value == 0.0

    def test_tail_above_one(self, rough_profile):
        layers = [rough_layer(), rough_layer()]
        res = expected_sq_bound(60000, layers, rough_profile, ROUGH_SIGNAL)
        assert res.n0 > 1
        base = remainder_base(layers, rough_profile, ROUGH_SIGNAL)
        expected = math.exp(-res.n0**2 + 3 * math.log(60000) + 2 * math.log(base))
        assert res.remainder == pytest.approx(expected, rel=1e-9)

    def test_tail_below_one(self, unit_profile, unit_layer, unit_signal):
        res = expected_sq_bound(4, [unit_layer], unit_profile, unit_signal)
        assert res.n0 == pytest.approx(1 / SQRT2)
        base = remainder_base([unit_layer], unit_profile, unit_signal)
        expected = math.sqrt(math.pi) * math.erfc(res.n0) * 4 * base**2
        assert res.remainder == pytest.approx(expected, rel=1e-9)


class TestDeterministic:
    def test_monotone_in_n(self, rough_profile):
        vals = [deterministic_output_bound([rough_layer()] * 2, rough_profile, n, 1.0).value for n in (4, 16, 64)]
        assert vals[0] < vals[1] < vals[2]

    def test_zero_network(self, rough_profile):
        assert deterministic_output_bound([ZERO_LAYER], rough_profile, 50, 3.0).value == 0.0

    def test_single_layer(self, unit_profile, unit_layer):
        res = deterministic_output_bound([unit_layer], unit_profile, 2, 1.0)
        assert res.A_prime == 0.0
        assert res.A_dprime == pytest.approx(16.0 * (1 + 1))
        assert res.value == pytest.approx(2**2 * 32.0)

    def test_coefficients_free_of_n(self, rough_profile):
        layers = [rough_layer(), rough_layer(lip_phi=0.7)]
        small = deterministic_output_bound(layers, rough_profile, 4, 1.5)
        big = deterministic_output_bound(layers, rough_profile, 64, 1.5)
        assert (small.A_prime, small.A_dprime) == (big.A_prime, big.A_dprime)
        assert (small.A_prime, small.A_dprime) == deterministic_coefficients(layers, rough_profile)
        expected = 64.0**4 * (big.A_prime + big.A_dprime * 1.5**2)
        assert big.value == pytest.approx(expected, rel=1e-12)


def one_class(gamma=1.0):
    return ClassSpec(Kernel.constant(1.0), product_signal(), gamma)


class TestGeneralization:
    def test_zero_network(self, unit_profile, unit_signal):
        dist = ClassDistribution((one_class(0.5), one_class(0.5)), NodeLaw.fixed(64))
        res = generalization_bound(dist, [ZERO_LAYER], [unit_profile] * 2, [unit_signal] * 2, 10, 1.0)
        assert res.value == 0.0
        assert res.per_sample == 0.0

    def test_representativeness(self, unit_profile, unit_layer, unit_signal):
        dist = ClassDistribution((one_class(0.5), one_class(0.5)), NodeLaw.fixed(64))
        with pytest.raises(RepresentativenessError):
            generalization_bound(dist, [unit_layer], [unit_profile] * 2, [unit_signal] * 2, 3, 1.0)

    def test_leading_scales_inverse_n(self, unit_profile, unit_layer, unit_signal):
        def bound(n):
            dist = ClassDistribution((one_class(),), NodeLaw.fixed(n))
            return generalization_bound(dist, [unit_layer], [unit_profile], [unit_signal], 4, 2.0)

        small, big = bound(1024), bound(4096)
        assert big.leading == pytest.approx(small.leading / 4, rel=1e-12)
        assert big.value == pytest.approx(small.value / 4, rel=1e-9)
        assert big.per_sample == pytest.approx(big.value / 4)

    def test_remainder_shares_factor(self, rough_profile):
        layers = [rough_layer(), rough_layer()]
        law = NodeLaw.categorical([20, 40], [0.5, 0.5])
        dist = ClassDistribution((one_class(),), law)
        res = generalization_bound(dist, layers, [rough_profile], [ROUGH_SIGNAL], 1, 1.5)
        consts = bound_constants(layers, rough_profile, ROUGH_SIGNAL)
        big_c = 8.0 * (sum(consts.node_grouped) + consts.B_prime + consts.B_dprime) ** 2
        factor = math.sqrt(math.pi) * 1.5**2 * 7 * big_c * (2.0 + SQRT2) ** 2
        assert res.factor == pytest.approx(factor, rel=1e-12)
        assert res.leading == pytest.approx(factor * (0.5 / 20 + 0.5 / 40), rel=1e-12)
        tail = 0.5 * sum(expected_sq_bound(n, layers, rough_profile, ROUGH_SIGNAL).remainder for n in (20, 40))
        assert res.remainder > 0
        assert res.remainder == pytest.approx(factor * tail, rel=1e-12)

    def test_per_class_inputs(self, unit_profile, unit_layer, unit_signal):
        dist = ClassDistribution((one_class(0.5), one_class(0.5)), NodeLaw.fixed(64))
        with pytest.raises(InvalidArgumentError):
            generalization_bound(dist, [unit_layer], [unit_profile], [unit_signal], 4, 1.0)

    def test_class_counts(self):
        dist = ClassDistribution((one_class(0.25), one_class(0.75)), NodeLaw.fixed(8))
        assert class_counts(dist, 8) == [2, 6]

    def test_gamma_sum(self):
        with pytest.raises(InvalidArgumentError):
            ClassDistribution((one_class(0.5), one_class(0.4)), NodeLaw.fixed(8))


class TestNodeLaw:
    def test_fixed(self):
        law = NodeLaw.fixed(64)
        assert law.expectation(lambda n: 1.0 / n) == 1.0 / 64
        assert law.to_dict() == {"kind": "fixed", "n": 64}

    def test_uniform_range(self):
        law = NodeLaw.uniform_range(2, 4)
        assert law.expectation(lambda n: 1.0 / n) == pytest.approx((1 / 2 + 1 / 3 + 1 / 4) / 3)
        assert node_law_from_dict(law.to_dict()) == law

    def test_categorical(self):
        law = NodeLaw.categorical([10, 20], [0.25, 0.75])
        assert law.expectation(float) == pytest.approx(17.5)
        with pytest.raises(InvalidArgumentError):
            NodeLaw.categorical([10, 20], [0.5, 0.6])

    def test_unknown_kind(self):
        with pytest.raises(InvalidArgumentError):
            node_law_from_dict({"kind": "poisson"})


class TestReport:
    def test_keys_without_n(self, unit_profile, unit_layer, unit_signal):
        doc = bound_report([unit_layer], unit_profile, unit_signal, P_UNIT_LOG).to_json()
        json.dumps(doc)
        assert doc["min_n"] == 8
        assert doc["eps_d"] == pytest.approx(SQRT2)
        assert doc["C3"] == pytest.approx(10 * SQRT2)
        assert doc["failure_prob_multiplier"] == {"node": 3, "pooled": 4, "two_graph": 8}
        assert doc["layers"][0]["D"] == pytest.approx(10 * SQRT2)
        assert doc["layers"][0]["K"] == pytest.approx(3.0)
        assert doc["A_prime"] == 0.0
        assert doc["A_dprime"] == pytest.approx(32.0)
        assert "deterministic_value" not in doc
        assert "node_bound" not in doc and "n" not in doc

    def test_with_n(self, unit_profile, unit_layer, unit_signal):
        doc = bound_report([unit_layer], unit_profile, unit_signal, P_UNIT_LOG, n=10**4).to_json()
        assert doc["node_bound"]["value"] == pytest.approx(0.1414, abs=1e-4)
        assert {"leading", "remainder", "value", "n0"} <= set(doc["expected_sq"])
        assert "A_dprime" in doc

    def test_below_min_n(self, unit_profile, unit_layer, unit_signal):
        doc = bound_report([unit_layer], unit_profile, unit_signal, P_UNIT_LOG, n=4).to_json()
        assert "node_bound" not in doc and "pooled_bound" not in doc
        assert doc["n"] == 4
