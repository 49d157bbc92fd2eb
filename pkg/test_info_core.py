"""Tests for finite and Gaussian probability primitives"""

import json
import math

import numpy as np
import pytest
from scipy import stats

from src.errors import (
    AbsoluteContinuityViolation,
    AlphabetMismatch,
    InvalidParameters,
    NonPositiveVariance,
    NormalizationError,
    OutOfRangeAlpha,
)
from src.info_core import (
    AwgnPair,
    DmcPair,
    FiniteDistribution,
    LinkKind,
    LlrWeight,
    bsc,
    channel_kind,
    chi_squared,
    gaussian_llr_weight,
    gaussian_log_likelihood_ratio,
    gaussian_mixture_density,
    kl_divergence,
    load_channel,
    load_distribution,
    mixture,
    tv_distance,
)


class TestFiniteDistribution:
    def test_rejects_unnormalized(self):
        with pytest.raises(NormalizationError):
            FiniteDistribution(probs=(0.5, 0.4))

    def test_rejects_negative_and_singleton(self):
        with pytest.raises(NormalizationError):
            FiniteDistribution(probs=(1.2, -0.2))
        with pytest.raises(NormalizationError):
            FiniteDistribution(probs=(1.0,))

    def test_absorbs_rounding(self):
        dist = FiniteDistribution(probs=(0.1, 0.2, 0.7 + 1e-13))
        assert dist.array.sum() == pytest.approx(1.0, abs=1e-15)
        assert dist.size == 3


class TestDivergences:
    def test_bsc_values(self):
        q0, q1 = bsc(0.1)
        assert kl_divergence(q1, q0) == pytest.approx(0.8 * math.log(9.0))
        assert chi_squared(q1, q0) == pytest.approx(0.64 / 0.9 + 0.64 / 0.1)
        assert tv_distance(q1, q0) == pytest.approx(0.8)

    def test_zero_on_identical(self):
        p = FiniteDistribution(probs=(0.2, 0.3, 0.5))
        assert kl_divergence(p, p) == 0.0
        assert chi_squared(p, p) == 0.0
        assert tv_distance(p, p) == 0.0

    def test_zero_mass_convention(self):
        p = FiniteDistribution(probs=(1.0, 0.0))
        q = FiniteDistribution(probs=(0.5, 0.5))
        assert kl_divergence(p, q) == pytest.approx(math.log(2.0))

    def test_continuity_violation(self):
        p = FiniteDistribution(probs=(0.5, 0.5))
        q = FiniteDistribution(probs=(1.0, 0.0))
        with pytest.raises(AbsoluteContinuityViolation):
            kl_divergence(p, q)
        with pytest.raises(AbsoluteContinuityViolation):
            chi_squared(p, q)

    def test_alphabet_mismatch(self):
        with pytest.raises(AlphabetMismatch):
            tv_distance(
                FiniteDistribution(probs=(0.5, 0.5)),
                FiniteDistribution(probs=(0.2, 0.3, 0.5)),
            )

    def test_pinsker_and_chi2_sandwich(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            p = FiniteDistribution(probs=tuple(rng.dirichlet(np.ones(4))))
            q = FiniteDistribution(probs=tuple(rng.dirichlet(np.ones(4))))
            kl = kl_divergence(p, q)
            assert tv_distance(p, q) <= math.sqrt(kl / 2.0) + 1e-12
            assert kl <= math.log1p(chi_squared(p, q)) + 1e-12


class TestMixture:
    def test_midpoint(self):
        q0, q1 = bsc(0.1)
        assert mixture(q0, q1, 0.5).probs == pytest.approx((0.5, 0.5))

    def test_endpoints_return_inputs(self):
        q0, q1 = bsc(0.2)
        assert mixture(q0, q1, 0.0) == q0
        assert mixture(q0, q1, 1.0) == q1

    def test_out_of_range(self):
        q0, q1 = bsc(0.2)
        with pytest.raises(OutOfRangeAlpha):
            mixture(q0, q1, 1.5)


class TestGaussian:
    def test_log_ratio_matches_densities(self):
        a, s2 = 0.7, 1.3
        z = np.linspace(-4.0, 4.0, 17)
        expected = np.log(gaussian_mixture_density(z, a, s2) / stats.norm.pdf(z, scale=math.sqrt(s2)))
        assert gaussian_log_likelihood_ratio(z, a, s2) == pytest.approx(expected, rel=1e-10)
        assert np.log1p(gaussian_llr_weight(z, a, s2)) == pytest.approx(expected, rel=1e-10)

    def test_log_ratio_does_not_overflow(self):
        value = gaussian_log_likelihood_ratio(1e6, 1.0, 1.0)
        assert math.isfinite(value)
        assert value == pytest.approx(1e6 - 0.5 - math.log(2.0))

    def test_scalar_in_scalar_out(self):
        assert isinstance(gaussian_mixture_density(0.0, 1.0, 1.0), float)

    def test_mixture_density_values(self):
        assert gaussian_mixture_density(0.0, 1.0, 1.0) == pytest.approx(0.24197, abs=1e-5)
        z = np.linspace(-3.0, 3.0, 13)
        assert gaussian_mixture_density(z, 0.0, 2.0) == pytest.approx(stats.norm.pdf(z, scale=math.sqrt(2.0)))
        assert gaussian_mixture_density(z, 0.6, 0.8) == pytest.approx(gaussian_mixture_density(-z, 0.6, 0.8))

    def test_rejects_bad_variance(self):
        with pytest.raises(NonPositiveVariance):
            gaussian_mixture_density(0.0, 1.0, 0.0)


class TestLlrWeight:
    def test_discrete_moments(self):
        q0, q1 = bsc(0.1)
        weight = LlrWeight.discrete(q0, q1)
        assert weight.values == pytest.approx((-0.8 / 0.9, 8.0))
        assert weight.reference_mean() == pytest.approx(0.0, abs=1e-15)
        assert weight.reference_second_moment() == pytest.approx(chi_squared(q1, q0))
        # E_Q1[Psi] = chi2(Q1 || Q0)
        assert weight.mean_under(q1) == pytest.approx(chi_squared(q1, q0))
        assert weight.max_value == pytest.approx(8.0)

    def test_gaussian_second_moment(self):
        weight = LlrWeight.gaussian(0.5, 1.0)
        assert weight.reference_second_moment() == pytest.approx(math.cosh(0.25) - 1.0)
        with pytest.raises(InvalidParameters):
            weight.max_value

    def test_needs_exactly_one_form(self):
        with pytest.raises(InvalidParameters):
            LlrWeight()


class TestChannels:
    def test_bsc_pair_terms(self, bsc_pair):
        terms = bsc_pair.information_terms()
        assert terms.bob_kl == pytest.approx(0.9 * math.log(19.0))
        assert terms.willie_kl == pytest.approx(0.8 * math.log(9.0))
        assert terms.willie_chi2 == pytest.approx(0.64 / 0.9 + 6.4)

    def test_identical_willie_laws_rejected(self):
        with pytest.raises(InvalidParameters):
            DmcPair.from_bsc(0.1, 0.5)

    def test_awgn_variances(self):
        with pytest.raises(NonPositiveVariance):
            AwgnPair(sigma_b2=0.0, sigma_w2=1.0)

    def test_load_channel(self):
        awgn = load_channel(json.dumps({"sigma_b2": 0.25, "sigma_w2": 1.0}))
        assert channel_kind(awgn) == LinkKind.AWGN

        dmc = load_channel({"p0": [0.9, 0.1], "p1": [0.1, 0.9], "q0": [0.8, 0.2], "q1": [0.3, 0.7]})
        assert channel_kind(dmc) == LinkKind.DMC
        assert dmc.q1.probs == pytest.approx((0.3, 0.7))

    def test_load_channel_missing_law(self):
        with pytest.raises(InvalidParameters):
            load_channel({"p0": [0.9, 0.1], "p1": [0.1, 0.9], "q0": [0.8, 0.2]})

    def test_load_distribution(self):
        dist = load_distribution('{"probs": [0.25, 0.75]}')
        assert dist.probs == (0.25, 0.75)
