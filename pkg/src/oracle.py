"""
Exact output laws of tiny instances by full enumeration.

Tables are dense: entry ``k`` is the probability of the sequence whose
base-|Z| digits (first symbol most significant) spell ``k``.
"""

import logging
import math
from functools import reduce
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import special

from src.codec import Codebook
from src.errors import (
    AlphabetMismatch,
    InsufficientTrials,
    InvalidParameters,
    KeyMismatch,
    NonPositiveTrials,
    OutOfRangeAlpha,
    TooLargeToEnumerate,
)
from src.info_core import (
    DmcPair,
    FiniteDistribution,
    LinkKind,
    check_variance,
    chi_squared,
    gaussian_log_likelihood_ratio,
    mixture,
)
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

MAX_TABLE_ENTRIES = 10**8
MAX_FRAME_LENGTH = 26
MIN_KL_TRIALS = 10_000


def check_enumerable(alphabet_size: int, length: int) -> None:
    if length > MAX_FRAME_LENGTH or alphabet_size**length > MAX_TABLE_ENTRIES:
        raise TooLargeToEnumerate(
            f"|Z|^N = {alphabet_size}^{length} exceeds {MAX_TABLE_ENTRIES:.0e} "
            f"entries or N > {MAX_FRAME_LENGTH}"
        )


class ProbabilityTable(BaseModel):
    """Dense probability table over Z^N"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    alphabet_size: int = Field(ge=2)
    length: int = Field(ge=1)
    probs: np.ndarray

    @model_validator(mode="after")
    def _dense(self) -> "ProbabilityTable":
        expected = self.alphabet_size**self.length
        if self.probs.shape != (expected,):
            raise InvalidParameters(f"Table has shape {self.probs.shape}, expected ({expected},)")
        return self

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.alphabet_size,) * self.length

    def total(self) -> float:
        return float(self.probs.sum())

    def index_of(self, sequence: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(int(s) for s in sequence), self.shape))

    def sequence_of(self, index: int) -> Tuple[int, ...]:
        return tuple(int(s) for s in np.unravel_index(index, self.shape))

    def probability(self, sequence: Sequence[int]) -> float:
        if len(sequence) != self.length:
            raise KeyMismatch(f"Sequence of length {len(sequence)} in a length-{self.length} table")
        return float(self.probs[self.index_of(sequence)])

    def to_dict(self) -> Dict[Tuple[int, ...], float]:
        return {self.sequence_of(k): float(p) for k, p in enumerate(self.probs)}

    def export_csv(self, path: Union[str, Path]) -> Path:
        """Two columns: sequence index and probability"""
        return write_csv(
            path,
            ["sequence_index", "probability"],
            ((k, float(p)) for k, p in enumerate(self.probs)),
        )


def _outer(factors: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.multiply.outer, factors).ravel()


def product_law(dists: Sequence[FiniteDistribution]) -> ProbabilityTable:
    """Table of the product distribution dists[0] x dists[1] x ..."""
    if not dists:
        raise InvalidParameters("product_law needs at least one factor")
    size = dists[0].size
    if any(d.size != size for d in dists):
        raise AlphabetMismatch("All factors must share one alphabet")
    check_enumerable(size, len(dists))
    return ProbabilityTable(
        alphabet_size=size, length=len(dists), probs=_outer([d.array for d in dists])
    )


class ExactInstance(BaseModel):
    """A slotted transmission small enough to enumerate Z^{nL}"""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    L: int = Field(ge=1)
    channel: DmcPair
    codebook: Optional[Codebook] = None
    alpha: float = Field(description="Input bias of the ideal mixture Q_alpha")

    @model_validator(mode="after")
    def _feasible(self) -> "ExactInstance":
        if not 0.0 <= self.alpha <= 1.0:
            raise OutOfRangeAlpha(f"alpha must lie in [0, 1], got {self.alpha}")
        check_enumerable(self.channel.q0.size, self.n * self.L)
        if self.codebook is not None:
            if self.codebook.length != self.n:
                raise InvalidParameters(
                    f"Codeword length {self.codebook.length} differs from n={self.n}"
                )
            if self.codebook.link_kind != LinkKind.DMC:
                raise InvalidParameters("Enumeration needs a binary codebook")
        return self

    @property
    def frame_length(self) -> int:
        return self.n * self.L

    @property
    def alphabet_size(self) -> int:
        return self.channel.q0.size


def _mixture_slot(instance: ExactInstance) -> np.ndarray:
    q_alpha = mixture(instance.channel.q0, instance.channel.q1, instance.alpha)
    return _outer([q_alpha.array] * instance.n)


def _codebook_slot(instance: ExactInstance) -> np.ndarray:
    q = (instance.channel.q0.array, instance.channel.q1.array)
    words, counts = np.unique(instance.codebook.codewords, axis=0, return_counts=True)
    slot = np.zeros(instance.alphabet_size**instance.n)
    for word, count in zip(words, counts):
        slot += count * _outer([q[int(x)] for x in word])
    return slot / instance.codebook.size


def _spread_over_slots(instance: ExactInstance, slot: np.ndarray) -> ProbabilityTable:
    """(1/L) sum_t Q0^{n(t-1)} x slot x Q0^{n(L-t)}"""
    idle = _outer([instance.channel.q0.array] * instance.n)
    L = instance.L
    probs = sum(_outer([idle] * (t - 1) + [slot] + [idle] * (L - t)) for t in range(1, L + 1)) / L
    return ProbabilityTable(
        alphabet_size=instance.alphabet_size, length=instance.frame_length, probs=probs
    )


def exact_mixture_law(instance: ExactInstance) -> ProbabilityTable:
    """Slot mixture Q_alpha^N of the ideal iid input law"""
    if instance.codebook is not None:
        raise InvalidParameters("exact_mixture_law expects an instance without a codebook")
    return _spread_over_slots(instance, _mixture_slot(instance))


def exact_induced_law(instance: ExactInstance) -> ProbabilityTable:
    """Output law induced by a uniform message in a uniform slot"""
    if instance.codebook is None:
        raise InvalidParameters("exact_induced_law needs a codebook")
    return _spread_over_slots(instance, _codebook_slot(instance))


def exact_null_law(instance: ExactInstance) -> ProbabilityTable:
    """Q0^{nL}: what Willie sees when nothing is sent"""
    return product_law([instance.channel.q0] * instance.frame_length)


def single_slot_laws(instance: ExactInstance) -> Tuple[ProbabilityTable, ProbabilityTable]:
    """(codebook-induced, ideal mixture) laws of one slot"""
    if instance.codebook is None:
        raise InvalidParameters("single_slot_laws needs a codebook")
    size, n = instance.alphabet_size, instance.n
    return (
        ProbabilityTable(alphabet_size=size, length=n, probs=_codebook_slot(instance)),
        ProbabilityTable(alphabet_size=size, length=n, probs=_mixture_slot(instance)),
    )


def _check_keys(p: ProbabilityTable, q: ProbabilityTable) -> None:
    if (p.alphabet_size, p.length) != (q.alphabet_size, q.length):
        raise KeyMismatch(
            f"Tables over {p.alphabet_size}^{p.length} and {q.alphabet_size}^{q.length} sequences"
        )


def exact_kl(p: ProbabilityTable, q: ProbabilityTable) -> float:
    """D(p || q) over the enumerated space; inf when p is not dominated by q"""
    _check_keys(p, q)
    return max(0.0, float(special.rel_entr(p.probs, q.probs).sum()))


def exact_tv(p: ProbabilityTable, q: ProbabilityTable) -> float:
    _check_keys(p, q)
    return float(0.5 * np.abs(p.probs - q.probs).sum())


def _kl_block(
    n: int, L: int, amplitude: float, sigma_w2: float, seed: int, block: TrialBlock
) -> MomentSums:
    rng = substream(seed, StreamRole.KL_ESTIMATE, block.index)
    z = math.sqrt(sigma_w2) * rng.standard_normal((block.count, L, n))
    slots = rng.integers(L, size=block.count)
    signs = np.where(rng.integers(0, 2, size=(block.count, n)) == 1, amplitude, -amplitude)
    z[np.arange(block.count), slots, :] += signs
    per_slot = gaussian_log_likelihood_ratio(z, amplitude, sigma_w2).sum(axis=2)
    return MomentSums.of(special.logsumexp(per_slot, axis=1) - math.log(L))


def mc_kl_awgn(n: int, L: int, rho: float, sigma_w2: float, trials: int, seed: int) -> Estimate:
    """
    Monte Carlo estimate of D(q_rho^N || q_0^N) with its standard error.

    Samples are drawn from the slot mixture itself and the exact log
    likelihood ratio log((1/L) sum_l prod_i (1 + A(z_i))) is averaged.
    """
    if trials <= 0:
        raise NonPositiveTrials(f"trials must be positive, got {trials}")
    if trials < MIN_KL_TRIALS:
        raise InsufficientTrials(f"mc_kl_awgn needs at least {MIN_KL_TRIALS} trials, got {trials}")
    check_variance(sigma_w2)
    if rho < 0:
        raise InvalidParameters(f"rho must be non-negative, got {rho}")
    if rho == 0.0:
        return Estimate(0.0, 0.0)

    amplitude = math.sqrt(rho)
    blocks = trial_blocks(trials, block_size_for(n * L))
    parts = run_blocks(lambda b: _kl_block(n, L, amplitude, sigma_w2, seed, b), blocks)
    estimate = merge_all(parts).estimate()
    logger.debug(
        f"🎲 KL estimate n={n} L={L} rho={rho}: {estimate.value:.5g} +/- {estimate.std_error:.2g}"
    )
    return estimate


def random_binary_channel(seed: int, index: int, min_chi2: float) -> DmcPair:
    """Seeded binary-output Willie channel with chi2(Q1 || Q0) >= min_chi2; Bob sees the same laws"""
    rng = substream(seed, StreamRole.CHANNEL_DRAW, index)
    while True:
        u, v = rng.uniform(0.01, 0.99, size=2)
        q0 = FiniteDistribution(probs=(float(u), float(1.0 - u)))
        q1 = FiniteDistribution(probs=(float(v), float(1.0 - v)))
        if chi_squared(q1, q0) >= min_chi2:
            return DmcPair(p0=q0, p1=q1, q0=q0, q1=q1)
