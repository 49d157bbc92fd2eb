"""Tests for exact enumeration of tiny instances and the Monte Carlo KL estimator"""

import itertools
import math

import numpy as np
import pytest

from src.bounds import awgn_slot_kl_bound, dmc_slot_kl_bound
from src.codec import Codebook, DmcBernoulli, generate_codebook
from src.errors import (
    InsufficientTrials,
    InvalidParameters,
    KeyMismatch,
    NonPositiveTrials,
    OutOfRangeAlpha,
    TooLargeToEnumerate,
)
from src.info_core import DmcPair, FiniteDistribution, bsc, chi_squared, kl_divergence, mixture
from src.oracle import (
    ExactInstance,
    ProbabilityTable,
    check_enumerable,
    exact_induced_law,
    exact_kl,
    exact_mixture_law,
    exact_null_law,
    exact_tv,
    mc_kl_awgn,
    product_law,
    random_binary_channel,
    single_slot_laws,
)
from src.random_streams import derive_seed


@pytest.fixture
def willie_bsc() -> DmcPair:
    return DmcPair.from_bsc(0.05, 0.1)


def _random_channels(count: int = 20):
    return [random_binary_channel(0, i, 0.01) for i in range(count)]


class TestTables:
    def test_enumeration_limits(self):
        check_enumerable(2, 26)
        with pytest.raises(TooLargeToEnumerate):
            check_enumerable(2, 27)
        with pytest.raises(TooLargeToEnumerate):
            check_enumerable(3, 17)

    def test_product_law(self):
        p = FiniteDistribution(probs=(0.2, 0.8))
        q = FiniteDistribution(probs=(0.6, 0.4))
        table = product_law([p, q, p])
        assert table.total() == pytest.approx(1.0)
        assert table.probability((1, 0, 1)) == pytest.approx(0.8 * 0.6 * 0.8)
        assert table.sequence_of(table.index_of((1, 0, 1))) == (1, 0, 1)
        assert len(table.to_dict()) == 8

    def test_probability_length_mismatch(self):
        table = product_law([bsc(0.1)[0]] * 2)
        with pytest.raises(KeyMismatch):
            table.probability((0, 1, 0))

    def test_dense_shape_checked(self):
        with pytest.raises(InvalidParameters):
            ProbabilityTable(alphabet_size=2, length=3, probs=np.ones(4) / 4)

    def test_export_csv(self, tmp_path):
        table = product_law([bsc(0.25)[0]] * 2)
        path = table.export_csv(tmp_path / "table.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "sequence_index,probability"
        assert len(lines) == 5


class TestExactLaws:
    def test_laws_are_normalized(self, willie_bsc):
        instance = ExactInstance(n=2, L=3, channel=willie_bsc, alpha=0.3)
        assert exact_mixture_law(instance).total() == pytest.approx(1.0)
        assert exact_null_law(instance).total() == pytest.approx(1.0)

    def test_single_slot_reduces_to_finite_kl(self, willie_bsc):
        instance = ExactInstance(n=1, L=1, channel=willie_bsc, alpha=0.4)
        expected = kl_divergence(mixture(willie_bsc.q0, willie_bsc.q1, 0.4), willie_bsc.q0)
        assert exact_kl(exact_mixture_law(instance), exact_null_law(instance)) == pytest.approx(expected)

    def test_more_slots_hide_better(self, willie_bsc):
        kls = []
        for L in (1, 2, 3):
            instance = ExactInstance(n=2, L=L, channel=willie_bsc, alpha=0.5)
            kls.append(exact_kl(exact_mixture_law(instance), exact_null_law(instance)))
        assert kls[0] > kls[1] > kls[2] > 0

    def test_slot_kl_dominance_grid(self):
        for channel in _random_channels():
            chi2 = chi_squared(channel.q1, channel.q0)
            for n, L, alpha in itertools.product(range(1, 4), range(1, 4), np.arange(1, 10) / 10):
                instance = ExactInstance(n=n, L=L, channel=channel, alpha=float(alpha))
                kl = exact_kl(exact_mixture_law(instance), exact_null_law(instance))
                bound = dmc_slot_kl_bound(n, L, float(alpha), chi2)
                assert kl <= bound.exact_form + 1e-9
                assert kl <= bound.exp_form + 1e-9

    def test_induced_law_needs_codebook(self, willie_bsc):
        instance = ExactInstance(n=2, L=2, channel=willie_bsc, alpha=0.3)
        with pytest.raises(InvalidParameters):
            exact_induced_law(instance)

    def test_mixture_law_rejects_codebook(self, willie_bsc):
        codebook = generate_codebook(DmcBernoulli(alpha=0.3), 4, 2, seed=1)
        instance = ExactInstance(n=2, L=2, channel=willie_bsc, codebook=codebook, alpha=0.3)
        with pytest.raises(InvalidParameters):
            exact_mixture_law(instance)

    def test_single_codeword_of_zeros_is_silent(self, willie_bsc):
        codebook = Codebook(
            law=DmcBernoulli(alpha=0.3), seed=0, codewords=np.zeros((1, 2), dtype=np.uint8)
        )
        instance = ExactInstance(n=2, L=2, channel=willie_bsc, codebook=codebook, alpha=0.3)
        assert exact_tv(exact_induced_law(instance), exact_null_law(instance)) == pytest.approx(0.0)

    def test_slot_convexity(self):
        for index, channel in enumerate(_random_channels(10)):
            codebook = generate_codebook(DmcBernoulli(alpha=0.3), 8, 2, derive_seed(0, index))
            instance = ExactInstance(n=2, L=2, channel=channel, codebook=codebook, alpha=0.3)
            ideal = ExactInstance(n=2, L=2, channel=channel, alpha=0.3)
            slot_induced, slot_mixture = single_slot_laws(instance)
            frame_tv = exact_tv(exact_induced_law(instance), exact_mixture_law(ideal))
            assert frame_tv <= exact_tv(slot_induced, slot_mixture) + 1e-12

    def test_instance_validation(self, willie_bsc):
        with pytest.raises(OutOfRangeAlpha):
            ExactInstance(n=2, L=2, channel=willie_bsc, alpha=1.5)
        with pytest.raises(TooLargeToEnumerate):
            ExactInstance(n=9, L=3, channel=willie_bsc, alpha=0.3)
        codebook = generate_codebook(DmcBernoulli(alpha=0.3), 4, 3, seed=2)
        with pytest.raises(InvalidParameters):
            ExactInstance(n=2, L=2, channel=willie_bsc, codebook=codebook, alpha=0.3)


class TestDivergences:
    def test_kl_not_dominated_is_infinite(self):
        p = ProbabilityTable(alphabet_size=2, length=1, probs=np.array([0.5, 0.5]))
        q = ProbabilityTable(alphabet_size=2, length=1, probs=np.array([1.0, 0.0]))
        assert exact_kl(p, q) == math.inf
        assert exact_tv(p, q) == pytest.approx(0.5)

    def test_key_mismatch(self, willie_bsc):
        short = exact_null_law(ExactInstance(n=1, L=2, channel=willie_bsc, alpha=0.2))
        long = exact_null_law(ExactInstance(n=1, L=3, channel=willie_bsc, alpha=0.2))
        with pytest.raises(KeyMismatch):
            exact_kl(short, long)
        with pytest.raises(KeyMismatch):
            exact_tv(short, long)


class TestMonteCarloKl:
    def test_trial_checks(self):
        with pytest.raises(NonPositiveTrials):
            mc_kl_awgn(1, 2, 0.5, 1.0, 0, seed=1)
        with pytest.raises(InsufficientTrials):
            mc_kl_awgn(1, 2, 0.5, 1.0, 100, seed=1)

    def test_zero_power(self):
        assert mc_kl_awgn(2, 2, 0.0, 1.0, 10_000, seed=1) == (0.0, 0.0)

    def test_negative_power(self):
        with pytest.raises(InvalidParameters):
            mc_kl_awgn(2, 2, -0.1, 1.0, 10_000, seed=1)

    def test_deterministic_in_seed(self):
        first = mc_kl_awgn(2, 2, 0.5, 1.0, 20_000, seed=9)
        assert mc_kl_awgn(2, 2, 0.5, 1.0, 20_000, seed=9) == first
        assert first.value > 0

    def test_below_slot_bound(self):
        for n, L in ((1, 2), (2, 2), (3, 4)):
            for ratio in (0.25, 0.5, 1.0):
                estimate = mc_kl_awgn(n, L, ratio, 1.0, 20_000, seed=n * 10 + L)
                bound = awgn_slot_kl_bound(n, L, ratio, 1.0).exact_form
                assert estimate.value <= bound + 3 * estimate.std_error

    @pytest.mark.slow
    def test_below_slot_bound_full_scale(self):
        for n, L in ((1, 2), (2, 2), (3, 4)):
            for ratio in (0.25, 0.5, 1.0):
                estimate = mc_kl_awgn(n, L, 2.0 * ratio, 2.0, 1_000_000, seed=n * 10 + L)
                bound = awgn_slot_kl_bound(n, L, 2.0 * ratio, 2.0).exact_form
                assert estimate.value <= bound + 3 * estimate.std_error


class TestRandomChannels:
    def test_seeded_and_distinguishable(self):
        channels = _random_channels(5)
        assert channels == _random_channels(5)
        for channel in channels:
            assert chi_squared(channel.q1, channel.q0) >= 0.01
            assert channel.p0 == channel.q0
