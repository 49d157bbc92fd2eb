"""
Finite and Gaussian probability primitives.

Distributions are immutable pydantic models holding linear-domain
probabilities; divergences follow the 0 * ln(0 / q) = 0 convention.
"""

import json
import math
from enum import Enum
from typing import Any, Mapping, Optional, Tuple, Union

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy import special

from src.errors import (
    AbsoluteContinuityViolation,
    AlphabetMismatch,
    InvalidParameters,
    NonPositiveVariance,
    NormalizationError,
    OutOfRangeAlpha,
)

NORMALIZATION_TOLERANCE = 1e-12
DISTINCT_TV_TOLERANCE = 1e-12


class FiniteDistribution(BaseModel):
    """Probability vector over a finite alphabet"""

    model_config = ConfigDict(frozen=True)

    probs: Tuple[float, ...] = Field(
        description="One non-negative probability per alphabet symbol"
    )

    @field_validator("probs")
    @classmethod
    def _normalized(cls, probs: Tuple[float, ...]) -> Tuple[float, ...]:
        if len(probs) < 2:
            raise NormalizationError(f"Alphabet size must be at least 2, got {len(probs)}")
        values = np.asarray(probs, dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise NormalizationError(f"Probabilities must be finite and non-negative: {probs}")
        total = float(values.sum())
        if abs(total - 1.0) > NORMALIZATION_TOLERANCE:
            raise NormalizationError(f"Probabilities sum to {total!r}, not 1")
        # Absorb rounding inside the tolerance
        return tuple(float(v) for v in values / total)

    @property
    def size(self) -> int:
        return len(self.probs)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def support(self) -> np.ndarray:
        return self.array > 0


def bsc(crossover: float) -> Tuple[FiniteDistribution, FiniteDistribution]:
    """Output laws of a binary symmetric channel for inputs x0 and x1"""
    if not 0.0 <= crossover <= 1.0:
        raise InvalidParameters(f"Crossover probability must lie in [0, 1], got {crossover}")
    return (
        FiniteDistribution(probs=(1.0 - crossover, crossover)),
        FiniteDistribution(probs=(crossover, 1.0 - crossover)),
    )


def check_alphabet(p: FiniteDistribution, q: FiniteDistribution) -> None:
    if p.size != q.size:
        raise AlphabetMismatch(f"Alphabet sizes differ: {p.size} vs {q.size}")


def check_continuity(p: FiniteDistribution, q: FiniteDistribution) -> None:
    violations = np.flatnonzero((q.array == 0) & (p.array > 0))
    if violations.size:
        raise AbsoluteContinuityViolation(
            f"Reference has zero mass at symbols {violations.tolist()} where p > 0"
        )


def kl_divergence(p: FiniteDistribution, q: FiniteDistribution) -> float:
    """Relative entropy D(p || q) in nats"""
    check_alphabet(p, q)
    check_continuity(p, q)
    return max(0.0, float(special.rel_entr(p.array, q.array).sum()))


def tv_distance(p: FiniteDistribution, q: FiniteDistribution) -> float:
    """Total variation distance (1/2) * sum |p - q|"""
    check_alphabet(p, q)
    return float(0.5 * np.abs(p.array - q.array).sum())


def chi_squared(p: FiniteDistribution, q: FiniteDistribution) -> float:
    """Chi-squared distance sum (p - q)^2 / q"""
    check_alphabet(p, q)
    check_continuity(p, q)
    mask = q.array > 0
    diff = p.array[mask] - q.array[mask]
    return float(np.sum(diff * diff / q.array[mask]))


def mixture(
    q0: FiniteDistribution, q1: FiniteDistribution, alpha: float
) -> FiniteDistribution:
    """Convex combination (1 - alpha) * q0 + alpha * q1"""
    check_alphabet(q0, q1)
    if not 0.0 <= alpha <= 1.0:
        raise OutOfRangeAlpha(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0.0:
        return q0
    if alpha == 1.0:
        return q1
    return FiniteDistribution(probs=tuple((1.0 - alpha) * q0.array + alpha * q1.array))


def _as_result(values: np.ndarray) -> Union[float, np.ndarray]:
    return float(values) if values.ndim == 0 else values


def check_variance(sigma2: float) -> None:
    if not sigma2 > 0:
        raise NonPositiveVariance(f"Variance must be positive, got {sigma2}")


def gaussian_mixture_density(
    z: ArrayLike, a: float, sigma2: float
) -> Union[float, np.ndarray]:
    """Density of (1/2) N(a, sigma2) + (1/2) N(-a, sigma2)"""
    check_variance(sigma2)
    z = np.asarray(z, dtype=float)
    scale = math.sqrt(sigma2)
    norm = 1.0 / math.sqrt(2.0 * math.pi * sigma2)
    density = 0.5 * norm * (
        np.exp(-0.5 * ((z - a) / scale) ** 2) + np.exp(-0.5 * ((z + a) / scale) ** 2)
    )
    return _as_result(density)


def gaussian_llr_weight(z: ArrayLike, a: float, sigma2: float) -> Union[float, np.ndarray]:
    """A(z) = exp(-a^2 / (2 sigma2)) cosh(a z / sigma2) - 1"""
    check_variance(sigma2)
    z = np.asarray(z, dtype=float)
    return _as_result(np.exp(-a * a / (2.0 * sigma2)) * np.cosh(a * z / sigma2) - 1.0)


def gaussian_log_likelihood_ratio(
    z: ArrayLike, a: float, sigma2: float
) -> Union[float, np.ndarray]:
    """log(1 + A(z)), evaluated without overflowing cosh"""
    check_variance(sigma2)
    u = a * np.asarray(z, dtype=float) / sigma2
    return _as_result(-a * a / (2.0 * sigma2) + np.logaddexp(u, -u) - math.log(2.0))


class LlrWeight(BaseModel):
    """
    Likelihood-ratio weight used by Willie's tests.

    Discrete: Psi(z) = (Q1(z) - Q0(z)) / Q0(z), zero off the support of Q0.
    Gaussian: A(z) = exp(-a^2 / (2 sigma_w^2)) cosh(a z / sigma_w^2) - 1.
    """

    model_config = ConfigDict(frozen=True)

    values: Optional[Tuple[float, ...]] = Field(
        default=None, description="Per-symbol weights for the discrete case"
    )
    reference: Optional[FiniteDistribution] = Field(
        default=None, description="Reference law Q0 for the discrete case"
    )
    amplitude: Optional[float] = Field(default=None, description="BPSK amplitude a")
    sigma2: Optional[float] = Field(default=None, description="Willie noise variance")

    @model_validator(mode="after")
    def _one_form(self) -> "LlrWeight":
        discrete = self.values is not None and self.reference is not None
        gaussian = self.amplitude is not None and self.sigma2 is not None
        if discrete == gaussian:
            raise InvalidParameters("LlrWeight needs either (values, reference) or (amplitude, sigma2)")
        if gaussian:
            check_variance(self.sigma2)
        return self

    @classmethod
    def discrete(cls, q0: FiniteDistribution, q1: FiniteDistribution) -> "LlrWeight":
        check_alphabet(q0, q1)
        check_continuity(q1, q0)
        ref = q0.array
        psi = np.zeros_like(ref)
        mask = ref > 0
        psi[mask] = (q1.array[mask] - ref[mask]) / ref[mask]
        return cls(values=tuple(float(v) for v in psi), reference=q0)

    @classmethod
    def gaussian(cls, amplitude: float, sigma2: float) -> "LlrWeight":
        return cls(amplitude=float(amplitude), sigma2=float(sigma2))

    @property
    def is_gaussian(self) -> bool:
        return self.amplitude is not None

    def evaluate(self, z: ArrayLike) -> Union[float, np.ndarray]:
        if self.is_gaussian:
            return gaussian_llr_weight(z, self.amplitude, self.sigma2)
        return _as_result(np.asarray(self.values)[np.asarray(z, dtype=int)])

    def reference_mean(self) -> float:
        if self.is_gaussian:
            # E[cosh(aZ/s2)] = exp(a^2 / (2 s2)) under N(0, s2)
            return 0.0
        return self.mean_under(self.reference)

    def reference_second_moment(self) -> float:
        if self.is_gaussian:
            return float(math.cosh(self.amplitude**2 / self.sigma2) - 1.0)
        return float(np.dot(self.reference.array, np.asarray(self.values) ** 2))

    def mean_under(self, dist: FiniteDistribution) -> float:
        self._require_discrete()
        return float(np.dot(dist.array, np.asarray(self.values)))

    def variance_under(self, dist: FiniteDistribution) -> float:
        self._require_discrete()
        psi = np.asarray(self.values)
        mean = float(np.dot(dist.array, psi))
        return max(0.0, float(np.dot(dist.array, psi * psi)) - mean * mean)

    @property
    def max_value(self) -> float:
        self._require_discrete()
        return float(max(self.values))

    def _require_discrete(self) -> None:
        if self.is_gaussian:
            raise InvalidParameters("Operation defined for discrete weights only")


class InformationTerms(BaseModel):
    """Channel constants entering every DMC formula"""

    bob_kl: float = Field(description="D(P1 || P0) in nats")
    willie_kl: float = Field(description="D(Q1 || Q0) in nats")
    willie_chi2: float = Field(description="chi2(Q1 || Q0)")
    bob_lambda: float = Field(description="sum_y P1(y) ln^2(P1(y) / P0(y))")
    willie_gamma: float = Field(description="sum_z Q1(z) ln^2(Q1(z) / Q0(z))")


def _squared_log_ratio_mean(p: FiniteDistribution, q: FiniteDistribution) -> float:
    mask = p.array > 0
    ratio = np.log(p.array[mask] / q.array[mask])
    return float(np.dot(p.array[mask], ratio * ratio))


class DmcPair(BaseModel):
    """Bob-side (P) and Willie-side (Q) output laws of a binary-input DMC"""

    model_config = ConfigDict(frozen=True)

    p0: FiniteDistribution = Field(description="Bob's output law for input x0")
    p1: FiniteDistribution = Field(description="Bob's output law for input x1")
    q0: FiniteDistribution = Field(description="Willie's output law for input x0")
    q1: FiniteDistribution = Field(description="Willie's output law for input x1")

    @model_validator(mode="after")
    def _channel_assumptions(self) -> "DmcPair":
        check_alphabet(self.p1, self.p0)
        check_alphabet(self.q1, self.q0)
        check_continuity(self.p1, self.p0)
        check_continuity(self.q1, self.q0)
        if tv_distance(self.q1, self.q0) <= DISTINCT_TV_TOLERANCE:
            raise InvalidParameters("Willie's output laws Q1 and Q0 must differ")
        return self

    @classmethod
    def from_bsc(cls, bob_crossover: float, willie_crossover: float) -> "DmcPair":
        p0, p1 = bsc(bob_crossover)
        q0, q1 = bsc(willie_crossover)
        return cls(p0=p0, p1=p1, q0=q0, q1=q1)

    @property
    def bob_side(self) -> Tuple[FiniteDistribution, FiniteDistribution]:
        return self.p0, self.p1

    @property
    def willie_side(self) -> Tuple[FiniteDistribution, FiniteDistribution]:
        return self.q0, self.q1

    def willie_weight(self) -> LlrWeight:
        return LlrWeight.discrete(self.q0, self.q1)

    def information_terms(self) -> InformationTerms:
        return dmc_information_terms(self)


class AwgnPair(BaseModel):
    """Noise variances of Bob's and Willie's Gaussian channels"""

    model_config = ConfigDict(frozen=True)

    sigma_b2: float = Field(description="Bob noise variance")
    sigma_w2: float = Field(description="Willie noise variance")

    @model_validator(mode="after")
    def _positive(self) -> "AwgnPair":
        check_variance(self.sigma_b2)
        check_variance(self.sigma_w2)
        return self

    def willie_weight(self, amplitude: float) -> LlrWeight:
        return LlrWeight.gaussian(amplitude, self.sigma_w2)


Channel = Union[DmcPair, AwgnPair]


def dmc_information_terms(pair: DmcPair) -> InformationTerms:
    return InformationTerms(
        bob_kl=kl_divergence(pair.p1, pair.p0),
        willie_kl=kl_divergence(pair.q1, pair.q0),
        willie_chi2=chi_squared(pair.q1, pair.q0),
        bob_lambda=_squared_log_ratio_mean(pair.p1, pair.p0),
        willie_gamma=_squared_log_ratio_mean(pair.q1, pair.q0),
    )


def _as_mapping(source: Union[str, bytes, Mapping[str, Any]]) -> Mapping[str, Any]:
    if isinstance(source, (str, bytes)):
        return json.loads(source)
    return source


def load_distribution(source: Union[str, bytes, Mapping[str, Any]]) -> FiniteDistribution:
    """Read a distribution from JSON text or a mapping {"probs": [...]}"""
    return FiniteDistribution.model_validate(_as_mapping(source))


def load_channel(source: Union[str, bytes, Mapping[str, Any]]) -> Channel:
    """Read a DMC pair {"p0", "p1", "q0", "q1"} or an AWGN pair {"sigma_b2", "sigma_w2"}"""
    data = _as_mapping(source)
    if "sigma_b2" in data or "sigma_w2" in data:
        return AwgnPair.model_validate(data)

    # Accept bare probability lists as well as {"probs": [...]} objects
    fields = {}
    for key in ("p0", "p1", "q0", "q1"):
        if key not in data:
            raise InvalidParameters(f"Channel description is missing '{key}'")
        value = data[key]
        fields[key] = value if isinstance(value, Mapping) else {"probs": value}
    return DmcPair.model_validate(fields)


class LinkKind(str, Enum):
    DMC = "dmc"
    AWGN = "awgn"


def channel_kind(channel: Channel) -> LinkKind:
    return LinkKind.AWGN if isinstance(channel, AwgnPair) else LinkKind.DMC
