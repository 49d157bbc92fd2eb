"""
Willie's side: max-slot detection tests, ROC and covertness estimates.

Monte Carlo ROC points are drawn from the sufficient statistics of the
weight and power tests (per-slot symbol counts and energies), which have
exactly the law of the full-frame statistic at a fraction of the cost.
"""

import logging
import math
from enum import Enum
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special

from src.bounds import (
    WillieStats,
    awgn_missed_detection_bound,
    converse_power_threshold,
    converse_test_threshold,
    converse_weight_threshold,
    dmc_missed_detection_bound,
    false_alarm_union_bound,
)
from src.codec import LOG_FLOOR, Bpsk, Codebook, CodebookLaw, DmcBernoulli, awgn_output, dmc_output
from src.errors import CostCapExceeded, InvalidParameters, KeyMismatch, LengthMismatch
from src.info_core import (
    AwgnPair,
    Channel,
    DmcPair,
    LinkKind,
    LlrWeight,
    channel_kind,
    gaussian_log_likelihood_ratio,
)
from src.oracle import ExactInstance, ProbabilityTable
from src.random_streams import (
    Estimate,
    MomentSums,
    StreamRole,
    TrialBlock,
    block_size_for,
    merge_all,
    run_blocks,
    substream,
    trial_blocks,
)
from src.reports import write_csv

logger = logging.getLogger(__name__)

# Upper bound on M * n * trials for mc_tv_estimate
TV_COST_CAP = 1e11
ROC_CSV_HEADER = ["tau", "alpha_hat", "alpha_se", "beta_hat", "beta_se"]


class DetectionKind(str, Enum):
    DMC_WEIGHT = "dmc_weight"
    AWGN_POWER = "awgn_power"
    LIKELIHOOD_RATIO = "likelihood_ratio"

    @classmethod
    def for_link(cls, kind: LinkKind) -> "DetectionKind":
        return cls.DMC_WEIGHT if kind == LinkKind.DMC else cls.AWGN_POWER


class Hypothesis(str, Enum):
    H0 = "H0"
    H1 = "H1"


class DetectionTest(BaseModel):
    """Threshold test on the largest per-slot statistic (or on log r for the LR test)"""

    model_config = ConfigDict(frozen=True)

    kind: DetectionKind
    tau: float
    n: int = Field(ge=1)
    L: int = Field(ge=1)

    @model_validator(mode="after")
    def _finite_threshold(self) -> "DetectionTest":
        if not math.isfinite(self.tau):
            raise InvalidParameters(f"Threshold must be finite, got {self.tau}")
        if self.kind != DetectionKind.LIKELIHOOD_RATIO and self.tau <= 0:
            raise InvalidParameters(f"{self.kind.value} threshold must be positive, got {self.tau}")
        return self

    @classmethod
    def converse(
        cls, kind: DetectionKind, n: int, L: int, epsilon: float, stats: WillieStats
    ) -> "DetectionTest":
        return cls(kind=kind, tau=threshold(kind, n, L, epsilon, stats), n=n, L=L)


class RocPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    false_alarm: float = Field(ge=0, le=1)
    missed_detection: float = Field(ge=0, le=1)
    std_errors: Tuple[float, float]

    @property
    def total(self) -> float:
        return self.false_alarm + self.missed_detection


def dmc_weight_statistic(slot_observation: np.ndarray, weight: LlrWeight) -> float:
    """(1/n) sum_i Psi(z_i)"""
    return float(np.mean(weight.evaluate(np.asarray(slot_observation, dtype=int))))


def awgn_power_statistic(slot_observation: np.ndarray, sigma_w2: float) -> float:
    """(1/n) sum_i z_i^2 - sigma_w^2"""
    z = np.asarray(slot_observation, dtype=float)
    return float(np.mean(z * z) - sigma_w2)


def threshold(kind: DetectionKind, n: int, L: int, epsilon: float, stats: WillieStats) -> float:
    if kind == DetectionKind.LIKELIHOOD_RATIO:
        raise InvalidParameters("The likelihood ratio test has no closed-form threshold")
    link = LinkKind.DMC if kind == DetectionKind.DMC_WEIGHT else LinkKind.AWGN
    return converse_test_threshold(link, n, L, epsilon, stats)


def _check_test_channel(kind: DetectionKind, channel: Channel) -> None:
    expected = DetectionKind.for_link(channel_kind(channel))
    if kind not in (expected, DetectionKind.LIKELIHOOD_RATIO):
        raise InvalidParameters(f"{kind.value} test cannot run on a {channel_kind(channel).value} channel")


def slot_statistics(z_N: np.ndarray, test: DetectionTest, channel: Channel) -> np.ndarray:
    """Per-slot statistic T(Z_l) for l = 1..L"""
    _check_test_channel(test.kind, channel)
    z = np.asarray(z_N)
    if z.size != test.n * test.L:
        raise LengthMismatch(f"Observation holds {z.size} symbols, expected {test.n * test.L}")
    slots = z.reshape(test.L, test.n)
    if test.kind == DetectionKind.DMC_WEIGHT:
        psi = np.asarray(channel.willie_weight().values)
        return psi[slots.astype(int)].mean(axis=1)
    if test.kind == DetectionKind.AWGN_POWER:
        return np.mean(slots * slots, axis=1) - channel.sigma_w2
    raise InvalidParameters("The likelihood ratio test is not a per-slot test")


def max_slot_detect(z_N: np.ndarray, test: DetectionTest, channel: Channel) -> Hypothesis:
    """H1 iff max_l T(Z_l) > tau"""
    return Hypothesis.H1 if slot_statistics(z_N, test, channel).max() > test.tau else Hypothesis.H0


def _dmc_log_ratio_table(pair: DmcPair) -> np.ndarray:
    """log(Q1(z) / Q0(z)) with a finite floor where Q1 vanishes"""
    q0, q1 = pair.q0.array, pair.q1.array
    table = np.zeros_like(q0)
    live = q0 > 0
    with np.errstate(divide="ignore"):
        table[live] = np.where(q1[live] > 0, np.log(q1[live]) - np.log(q0[live]), LOG_FLOOR)
    return table


def _slot_log_ratios(
    z: np.ndarray,
    channel: Channel,
    codebook: Optional[Codebook],
    law: Optional[CodebookLaw],
) -> np.ndarray:
    """
    For observations shaped (trials, L, n), the log likelihood ratio of
    each slot against Q0^n: averaged over codewords, or under the iid law.
    """
    trials, L, n = z.shape
    if codebook is not None:
        if isinstance(channel, AwgnPair):
            flat = z.reshape(trials * L, n)
            per_word = flat @ codebook.codewords.T / channel.sigma_w2
            per_word -= codebook.powers()[None, :] / (2.0 * channel.sigma_w2)
        else:
            flat = _dmc_log_ratio_table(channel)[z.reshape(trials * L, n).astype(int)]
            per_word = flat @ codebook.codewords.T.astype(float)
        mixed = special.logsumexp(per_word, axis=1) - math.log(codebook.size)
        return mixed.reshape(trials, L)

    if isinstance(channel, AwgnPair):
        if not isinstance(law, Bpsk):
            raise InvalidParameters("AWGN mixture needs a BPSK law")
        return gaussian_log_likelihood_ratio(z, law.amplitude, channel.sigma_w2).sum(axis=2)
    if not isinstance(law, DmcBernoulli):
        raise InvalidParameters("DMC mixture needs a Bernoulli law")
    psi = np.asarray(channel.willie_weight().values)
    return np.log1p(law.alpha * psi)[z.astype(int)].sum(axis=2)


def _frame_log_ratio(slot_logs: np.ndarray) -> np.ndarray:
    L = slot_logs.shape[-1]
    return special.logsumexp(slot_logs, axis=-1) - math.log(L)


def likelihood_ratio_statistic(
    z_N: np.ndarray,
    channel: Channel,
    L: int,
    codebook: Optional[Codebook] = None,
    law: Optional[CodebookLaw] = None,
) -> float:
    """log r(z^N) where r = Q_hat^N / Q0^N (codebook) or Q_alpha^N / Q0^N (iid law)"""
    if codebook is None and law is None:
        raise InvalidParameters("Likelihood ratio needs a codebook or an input law")
    z = np.asarray(z_N)
    if z.size % L:
        raise LengthMismatch(f"{z.size} symbols do not split into {L} slots")
    slots = z.reshape(1, L, z.size // L)
    return float(_frame_log_ratio(_slot_log_ratios(slots, channel, codebook, law))[0])


def _null_frames(channel: Channel, shape: Tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    if isinstance(channel, AwgnPair):
        return math.sqrt(channel.sigma_w2) * rng.standard_normal(shape)
    return dmc_output(np.zeros(shape, dtype=np.uint8), channel.willie_side, rng)


def _active_frames(
    codebook: Codebook, channel: Channel, L: int, count: int, rng: np.random.Generator
) -> np.ndarray:
    n = codebook.length
    words = rng.integers(codebook.size, size=count)
    slots = rng.integers(L, size=count)
    frames = np.zeros((count, L, n), dtype=codebook.codewords.dtype)
    frames[np.arange(count), slots, :] = codebook.codewords[words]
    if isinstance(channel, AwgnPair):
        return awgn_output(frames, channel.sigma_w2, rng)
    return dmc_output(frames, channel.willie_side, rng)


def _max_statistic_block(
    codebook: Codebook,
    L: int,
    channel: Channel,
    kind: DetectionKind,
    role: StreamRole,
    seed: int,
    block: TrialBlock,
) -> np.ndarray:
    rng = substream(seed, role, block.index)
    n, count = codebook.length, block.count
    active = role == StreamRole.DETECT_H1

    if kind == DetectionKind.LIKELIHOOD_RATIO:
        z = (
            _active_frames(codebook, channel, L, count, rng)
            if active
            else _null_frames(channel, (count, L, n), rng)
        )
        return _frame_log_ratio(_slot_log_ratios(z, channel, codebook, None))

    words = rng.integers(codebook.size, size=count) if active else None
    slots = rng.integers(L, size=count) if active else None
    rows = np.arange(count)

    if kind == DetectionKind.DMC_WEIGHT:
        psi = np.asarray(channel.willie_weight().values)
        q0, q1 = channel.q0.array, channel.q1.array
        counts = rng.multinomial(n, q0, size=(count, L))
        if active:
            weight = codebook.weights()[words]
            counts[rows, slots] = rng.multinomial(n - weight, q0) + rng.multinomial(weight, q1)
        stats = counts @ psi / n
    else:
        s2 = channel.sigma_w2
        energy = s2 * rng.chisquare(n, size=(count, L))
        if active:
            noncentrality = codebook.powers()[words] / s2
            energy[rows, slots] = s2 * rng.noncentral_chisquare(n, noncentrality)
        stats = energy / n - s2
    return stats.max(axis=1)


def sample_max_statistics(
    codebook: Codebook,
    L: int,
    channel: Channel,
    kind: DetectionKind,
    trials: int,
    seed: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Test statistic samples under H0 (silence) and H1 (uniform message and slot)"""
    _check_test_channel(kind, channel)
    if codebook.link_kind != channel_kind(channel):
        raise InvalidParameters(f"{codebook.law.kind} codebook on a {channel_kind(channel).value} channel")
    blocks = trial_blocks(trials, block_size_for(L * max(codebook.length, codebook.size)))
    samples = []
    for role in (StreamRole.DETECT_H0, StreamRole.DETECT_H1):
        parts = run_blocks(
            lambda b, role=role: _max_statistic_block(codebook, L, channel, kind, role, seed, b),
            blocks,
        )
        samples.append(np.concatenate(parts))
    return samples[0], samples[1]


def _roc_point(h0: np.ndarray, h1: np.ndarray, tau: float) -> RocPoint:
    alpha = float(np.mean(h0 > tau))
    beta = float(np.mean(h1 <= tau))
    return RocPoint(
        false_alarm=alpha,
        missed_detection=beta,
        std_errors=(
            math.sqrt(alpha * (1.0 - alpha) / h0.size),
            math.sqrt(beta * (1.0 - beta) / h1.size),
        ),
    )


def estimate_roc(
    codebook: Codebook, L: int, channel: Channel, test: DetectionTest, trials: int, seed: int
) -> RocPoint:
    """Empirical (false alarm, missed detection) of one test"""
    if test.n != codebook.length or test.L != L:
        raise InvalidParameters("Test dimensions differ from the codebook and slot count")
    h0, h1 = sample_max_statistics(codebook, L, channel, test.kind, trials, seed)
    point = _roc_point(h0, h1, test.tau)
    logger.debug(f"🎲 ROC tau={test.tau:.4g}: alpha={point.false_alarm:.4g} beta={point.missed_detection:.4g}")
    return point


def roc_sweep(
    codebook: Codebook,
    L: int,
    channel: Channel,
    kind: DetectionKind,
    taus: Sequence[float],
    trials: int,
    seed: int,
) -> List[Tuple[float, RocPoint]]:
    """ROC over several thresholds from one shared set of samples"""
    h0, h1 = sample_max_statistics(codebook, L, channel, kind, trials, seed)
    return [(float(tau), _roc_point(h0, h1, float(tau))) for tau in sorted(taus)]


def write_roc_csv(path: Union[str, Path], sweep: List[Tuple[float, RocPoint]]) -> Path:
    rows = (
        (tau, p.false_alarm, p.std_errors[0], p.missed_detection, p.std_errors[1])
        for tau, p in sweep
    )
    return write_csv(path, ROC_CSV_HEADER, rows)


def _tv_block(
    codebook: Optional[Codebook],
    law: Optional[CodebookLaw],
    n: int,
    L: int,
    channel: Channel,
    seed: int,
    block: TrialBlock,
) -> MomentSums:
    rng = substream(seed, StreamRole.TV_ESTIMATE, block.index)
    z = _null_frames(channel, (block.count, L, n), rng)
    log_r = _frame_log_ratio(_slot_log_ratios(z, channel, codebook, law))
    return MomentSums.of(0.5 * np.abs(np.expm1(log_r)))


def mc_tv_estimate(
    codebook: Optional[Codebook],
    L: int,
    channel: Channel,
    trials: int,
    seed: int,
    law: Optional[CodebookLaw] = None,
    n: Optional[int] = None,
) -> Estimate:
    """
    (1/2) E_{Q0^N} |r(Z^N) - 1| with its standard error.

    With ``codebook`` the ratio is the codebook-induced law over Q0^N;
    with ``codebook=None`` it is the ideal slot mixture of ``law``.
    """
    if codebook is None:
        if law is None or n is None:
            raise InvalidParameters("Mixture TV estimate needs the input law and n")
        m = 1
    else:
        n, m = codebook.length, codebook.size
        if codebook.link_kind != channel_kind(channel):
            raise InvalidParameters(f"{codebook.law.kind} codebook on a {channel_kind(channel).value} channel")
    if trials > 0 and m * n * trials > TV_COST_CAP:
        raise CostCapExceeded(f"M*n*trials = {m * n * trials:.3g} exceeds {TV_COST_CAP:.0e}")

    blocks = trial_blocks(trials, block_size_for(L * max(n, m)))
    parts = run_blocks(lambda b: _tv_block(codebook, law, n, L, channel, seed, b), blocks)
    return merge_all(parts).estimate()


class WeightPartition(BaseModel):
    """Codewords at or below the converse threshold versus above it"""

    model_config = ConfigDict(frozen=True)

    low: Optional[Codebook]
    high: Optional[Codebook]
    threshold: float
    low_fraction: float = Field(ge=0, le=1)


def weight_partition(codebook: Codebook, L: int, stats: WillieStats) -> WeightPartition:
    n = codebook.length
    if stats.kind == LinkKind.DMC:
        limit = converse_weight_threshold(n, L, stats.chi2)
        values = codebook.weights().astype(float)
    else:
        limit = converse_power_threshold(n, L, stats.sigma_w2)
        values = codebook.powers()
    low_mask = values <= limit
    return WeightPartition(
        low=codebook.subset(low_mask) if low_mask.any() else None,
        high=codebook.subset(~low_mask) if (~low_mask).any() else None,
        threshold=limit,
        low_fraction=float(low_mask.mean()),
    )


def enumerated_test_errors(
    decide_h1: np.ndarray, induced: ProbabilityTable, reference: ProbabilityTable
) -> Tuple[float, float]:
    """Exact (false alarm, missed detection) of a deterministic test region"""
    mask = np.asarray(decide_h1, dtype=bool)
    if (induced.alphabet_size, induced.length) != (reference.alphabet_size, reference.length):
        raise KeyMismatch("Induced and reference tables cover different sequence spaces")
    if mask.shape != induced.probs.shape:
        raise KeyMismatch(f"Test region covers {mask.size} sequences, tables {induced.probs.size}")
    return float(reference.probs[mask].sum()), float(induced.probs[~mask].sum())


def random_deterministic_tests(size: int, count: int, seed: int) -> List[np.ndarray]:
    """``count`` random subsets of the sequence space, each with its own density"""
    tests = []
    for index in range(count):
        rng = substream(seed, StreamRole.TEST_REGION, index)
        tests.append(rng.random(size) < rng.random())
    return tests


def max_slot_test_region(instance: ExactInstance, test: DetectionTest) -> np.ndarray:
    """Decision region of the weight test over every enumerated sequence"""
    if test.kind != DetectionKind.DMC_WEIGHT:
        raise InvalidParameters("Enumerated regions are defined for the weight test")
    if (test.n, test.L) != (instance.n, instance.L):
        raise InvalidParameters("Test dimensions differ from the instance")
    size, length = instance.alphabet_size, instance.frame_length
    psi = np.asarray(instance.channel.willie_weight().values)
    digits = np.stack(np.unravel_index(np.arange(size**length), (size,) * length), axis=1)
    stats = psi[digits].reshape(-1, instance.L, instance.n).mean(axis=2)
    return stats.max(axis=1) > test.tau


class DetectionDiagnostics(BaseModel):
    """Analytic companions of a simulated detection experiment"""

    kind: LinkKind
    n: int
    L: int
    tau: float
    threshold: float = Field(description="Converse weight or power threshold")
    smallest: float = Field(description="Smallest codeword weight or power")
    low_fraction: float
    false_alarm_bound: float
    missed_detection_bound: float = Field(description="Chebyshev bound; inf when vacuous")
    mu0: Optional[float] = None
    var0: Optional[float] = None
    mu1: Optional[float] = None
    var1: Optional[float] = None
    c_max: Optional[float] = None


def detection_diagnostics(
    codebook: Codebook, L: int, channel: Channel, epsilon: float
) -> DetectionDiagnostics:
    stats = WillieStats.from_channel(channel)
    n = codebook.length
    kind = channel_kind(channel)
    test = DetectionTest.converse(DetectionKind.for_link(kind), n, L, epsilon, stats)
    partition = weight_partition(codebook, L, stats)
    if kind == LinkKind.DMC:
        smallest = float(codebook.weights().min())
        beta_bound = dmc_missed_detection_bound(n, L, epsilon, smallest, stats)
    else:
        smallest = float(codebook.powers().min())
        beta_bound = awgn_missed_detection_bound(n, L, epsilon, smallest, stats.sigma_w2)
    return DetectionDiagnostics(
        kind=kind,
        n=n,
        L=L,
        tau=test.tau,
        threshold=partition.threshold,
        smallest=smallest,
        low_fraction=partition.low_fraction,
        false_alarm_bound=false_alarm_union_bound(kind, n, L, epsilon, stats),
        missed_detection_bound=beta_bound,
        mu0=stats.mu0,
        var0=stats.var0,
        mu1=stats.mu1,
        var1=stats.var1,
        c_max=stats.c_max,
    )
