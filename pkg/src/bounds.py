"""
Closed-form bounds, parameter choices and capacity expressions.

Every evaluator that can leave the double range also returns its value in
the log domain; linear fields are set to ``inf`` and ``overflow`` is raised
once the exponent passes ``LOG_OVERFLOW_THRESHOLD``.
"""

import math
from decimal import Decimal, localcontext
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import (
    CovertnessInfeasible,
    InvalidParameters,
    KeylessConditionViolated,
    NonPositiveArgument,
    OutOfRangeAlpha,
    RangeViolation,
)
from src.info_core import (
    AwgnPair,
    DmcPair,
    FiniteDistribution,
    LinkKind,
    check_alphabet,
    check_continuity,
    dmc_information_terms,
    mixture,
)

LOG_OVERFLOW_THRESHOLD = 700.0
DEFAULT_EPSILON = 1.2


class DensityReference(str, Enum):
    """Output law the information density is measured against"""

    MIXTURE = "mixture"  # P_alpha (DMC decoding region)
    PURE = "pure"  # P_0 (AWGN decoding region)


class AchievabilityParams(BaseModel):
    """Covertness budget and slack parameters"""

    model_config = ConfigDict(frozen=True)

    delta: float = Field(gt=0, lt=1, description="Covertness budget on TV distance")
    nu1: float = Field(default=0.25, gt=0, lt=1, description="Decoder threshold slack")
    nu2: float = Field(default=0.25, gt=0, lt=1, description="Soft-covering slack")
    delta1: float = Field(default=0.25, gt=0, lt=1, description="Reliability size slack")
    delta2: float = Field(default=0.25, gt=0, lt=1, description="Resolvability size slack")
    epsilon: float = Field(
        default=DEFAULT_EPSILON, gt=1, description="Converse test margin"
    )

    @property
    def xi(self) -> float:
        """1 - xi = (1 - delta1)(1 - nu1)"""
        return 1.0 - (1.0 - self.delta1) * (1.0 - self.nu1)

    @property
    def reliability_factor(self) -> float:
        return (1.0 - self.delta1) * (1.0 - self.nu1)

    @property
    def resolvability_factor(self) -> float:
        return (1.0 + self.delta2) * (1.0 + self.nu2)


class CapacityBounds(BaseModel):
    """Covert capacity bounds in nats per sqrt(n log L_n)"""

    model_config = ConfigDict(frozen=True)

    lower: float = Field(ge=0, description="Achievable throughput")
    upper: float = Field(ge=0, description="Converse throughput")


class SlotKlBound(BaseModel):
    """Slot-mixture relative entropy bound in linear and log form"""

    exact_form: float = Field(description="Polynomial (or cosh) form, inf on overflow")
    exp_form: float = Field(description="Exponential form, inf on overflow")
    log_exact_form: float
    log_exp_form: float
    overflow: bool = False


class InfoDensityMoments(BaseModel):
    """Per-symbol information density moments under the codebook input law"""

    model_config = ConfigDict(frozen=True)

    mean: float
    second_moment: float
    abs_max: float = Field(description="Largest |log ratio| (inf when unbounded)")

    @property
    def variance(self) -> float:
        return max(0.0, self.second_moment - self.mean * self.mean)


class MessageSize(BaseModel):
    """Integer message-set size with its natural log"""

    m: int = Field(ge=1)
    log_m: float = Field(ge=0)


class LogPenalty(BaseModel):
    """Change-of-measure penalty in the log domain"""

    exact: float
    bound: float


class WillieStats(BaseModel):
    """Willie-side constants consumed by the converse tests and their bounds"""

    model_config = ConfigDict(frozen=True)

    kind: LinkKind
    chi2: Optional[float] = Field(default=None, description="chi2(Q1 || Q0)")
    c_max: Optional[float] = Field(default=None, description="max_z Psi(z)")
    mu0: Optional[float] = Field(default=None, description="E_Q0[Psi]")
    var0: Optional[float] = Field(default=None, description="Var_Q0[Psi]")
    mu1: Optional[float] = Field(default=None, description="E_Q1[Psi]")
    var1: Optional[float] = Field(default=None, description="Var_Q1[Psi]")
    sigma_w2: Optional[float] = Field(default=None, description="Willie noise variance")

    @model_validator(mode="after")
    def _complete(self) -> "WillieStats":
        if self.kind == LinkKind.DMC and self.chi2 is None:
            raise InvalidParameters("DMC statistics need chi2")
        if self.kind == LinkKind.AWGN and self.sigma_w2 is None:
            raise InvalidParameters("AWGN statistics need sigma_w2")
        return self

    @classmethod
    def from_dmc(cls, pair: DmcPair) -> "WillieStats":
        weight = pair.willie_weight()
        return cls(
            kind=LinkKind.DMC,
            chi2=weight.reference_second_moment(),
            c_max=weight.max_value,
            mu0=weight.mean_under(pair.q0),
            var0=weight.variance_under(pair.q0),
            mu1=weight.mean_under(pair.q1),
            var1=weight.variance_under(pair.q1),
        )

    @classmethod
    def from_awgn(cls, pair: AwgnPair) -> "WillieStats":
        return cls(kind=LinkKind.AWGN, sigma_w2=pair.sigma_w2)

    @classmethod
    def from_channel(cls, channel) -> "WillieStats":
        if isinstance(channel, AwgnPair):
            return cls.from_awgn(channel)
        return cls.from_dmc(channel)


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not value > 0:
            raise NonPositiveArgument(f"{name} must be positive, got {value}")


def _require_dimensions(n: int, L: int) -> None:
    if n < 1 or L < 1:
        raise RangeViolation(f"n and L must be positive integers, got n={n}, L={L}")


def _log_expm1(t: float) -> float:
    """log(e^t - 1) for t >= 0"""
    if t <= 0.0:
        return -math.inf
    if t > 30.0:
        return t + math.log1p(-math.exp(-t))
    return math.log(math.expm1(t))


def _log_cosh(u: float) -> float:
    u = abs(u)
    return u + math.log1p(math.exp(-2.0 * u)) - math.log(2.0)


def _slot_bound(log_growth: float, exponent: float, L: int) -> SlotKlBound:
    log_exact = _log_expm1(log_growth) - math.log(L)
    log_exp = exponent - math.log(L)
    if exponent > LOG_OVERFLOW_THRESHOLD:
        return SlotKlBound(
            exact_form=math.inf,
            exp_form=math.inf,
            log_exact_form=log_exact,
            log_exp_form=log_exp,
            overflow=True,
        )
    return SlotKlBound(
        exact_form=math.expm1(log_growth) / L,
        exp_form=math.exp(exponent) / L,
        log_exact_form=log_exact,
        log_exp_form=log_exp,
    )


def dmc_slot_kl_bound(n: int, L: int, alpha: float, chi2: float) -> SlotKlBound:
    """((1 + alpha^2 chi2)^n - 1) / L  <=  e^{n alpha^2 chi2} / L"""
    _require_dimensions(n, L)
    if not 0.0 <= alpha < 1.0:
        raise OutOfRangeAlpha(f"alpha must lie in [0, 1), got {alpha}")
    _require_positive(chi2=chi2)
    x = alpha * alpha * chi2
    return _slot_bound(n * math.log1p(x), n * x, L)


def awgn_slot_kl_bound(n: int, L: int, rho: float, sigma_w2: float) -> SlotKlBound:
    """(cosh(rho / s2)^n - 1) / L  <=  e^{n rho^2 / (2 s2^2)} / L"""
    _require_dimensions(n, L)
    _require_positive(sigma_w2=sigma_w2)
    if rho < 0:
        raise NonPositiveArgument(f"rho must be non-negative, got {rho}")
    u = rho / sigma_w2
    return _slot_bound(n * _log_cosh(u), 0.5 * n * u * u, L)


def covertness_budget(n: int, delta: float) -> float:
    """KL budget 2 delta^2 - 4 n^{-1/2} of the slot mixture"""
    return 2.0 * delta * delta - 4.0 / math.sqrt(n)


def _log_budget_argument(n: int, L: int, delta: float) -> float:
    _require_dimensions(n, L)
    if not 0.0 < delta < 1.0:
        raise CovertnessInfeasible(f"delta must lie in (0, 1), got {delta}")
    budget = covertness_budget(n, delta)
    if budget <= 0.0:
        raise CovertnessInfeasible(
            f"n={n} too small for delta={delta}: 2 delta^2 - 4/sqrt(n) = {budget:.4g}"
        )
    argument = L * budget
    if argument < 1.0:
        raise CovertnessInfeasible(
            f"L={L} too small: L (2 delta^2 - 4/sqrt(n)) = {argument:.4g} < 1"
        )
    return math.log(argument)


def choose_alpha_n(n: int, L_n: int, delta: float, chi2: float) -> float:
    """Input bias whose exp-form slot bound equals the covertness budget"""
    _require_positive(chi2=chi2)
    alpha = math.sqrt(_log_budget_argument(n, L_n, delta) / (n * chi2))
    if alpha >= 1.0:
        raise CovertnessInfeasible(f"Required input bias {alpha:.4g} is not below 1")
    return alpha


def choose_rho_n(n: int, L_n: int, delta: float, sigma_w2: float) -> float:
    """Symbol power whose exp-form slot bound equals the covertness budget"""
    _require_positive(sigma_w2=sigma_w2)
    return math.sqrt(2.0 * sigma_w2 * sigma_w2 * _log_budget_argument(n, L_n, delta) / n)


def pinsker_tv_bound(kl: float) -> float:
    return math.sqrt(max(0.0, kl) / 2.0)


def dmc_capacity_bounds(pair: DmcPair, require_keyless: bool = True) -> CapacityBounds:
    """D(P1||P0) / sqrt(chi2)  and  sqrt(2) times that"""
    terms = dmc_information_terms(pair)
    if require_keyless and terms.bob_kl <= terms.willie_kl:
        raise KeylessConditionViolated(
            f"D(P1||P0) = {terms.bob_kl:.5g} does not exceed D(Q1||Q0) = {terms.willie_kl:.5g}"
        )
    lower = terms.bob_kl / math.sqrt(terms.willie_chi2)
    return CapacityBounds(lower=lower, upper=math.sqrt(2.0) * lower)


def awgn_capacity_bounds(pair: AwgnPair) -> CapacityBounds:
    """sigma_w^2 / (sqrt(2) sigma_b^2)  and  sigma_w^2 / sigma_b^2"""
    if pair.sigma_w2 <= pair.sigma_b2:
        raise KeylessConditionViolated(
            f"sigma_w^2 = {pair.sigma_w2} must exceed sigma_b^2 = {pair.sigma_b2}"
        )
    upper = pair.sigma_w2 / pair.sigma_b2
    return CapacityBounds(lower=upper / math.sqrt(2.0), upper=upper)


def key_throughput(pair: DmcPair) -> float:
    """(D(Q1||Q0) - D(P1||P0))^+ / sqrt(chi2)"""
    terms = dmc_information_terms(pair)
    return max(0.0, terms.willie_kl - terms.bob_kl) / math.sqrt(terms.willie_chi2)


def info_density_moments_dmc(
    x0_dist: FiniteDistribution,
    x1_dist: FiniteDistribution,
    alpha: float,
    reference: DensityReference = DensityReference.MIXTURE,
) -> InfoDensityMoments:
    """Exact moments of log(W(Y|X) / R(Y)) with X ~ Bernoulli(alpha)"""
    check_alphabet(x0_dist, x1_dist)
    check_continuity(x1_dist, x0_dist)
    if not 0.0 < alpha < 1.0:
        raise OutOfRangeAlpha(f"alpha must lie in (0, 1), got {alpha}")

    ref = mixture(x0_dist, x1_dist, alpha) if reference == DensityReference.MIXTURE else x0_dist
    r = ref.array
    mean = second = abs_max = 0.0
    for weight, law in ((1.0 - alpha, x0_dist.array), (alpha, x1_dist.array)):
        mask = law > 0
        log_ratio = [math.log(w / q) for w, q in zip(law[mask], r[mask])]
        for w, f in zip(law[mask], log_ratio):
            mean += weight * w * f
            second += weight * w * f * f
            abs_max = max(abs_max, abs(f))
    return InfoDensityMoments(mean=mean, second_moment=second, abs_max=abs_max)


def info_density_moments_awgn(rho: float, sigma2: float) -> InfoDensityMoments:
    """Moments of log(W(Y|X) / P0(Y)) for BPSK with power rho over N(0, sigma2)"""
    _require_positive(sigma2=sigma2)
    if rho < 0:
        raise NonPositiveArgument(f"rho must be non-negative, got {rho}")
    mean = rho / (2.0 * sigma2)
    return InfoDensityMoments(
        mean=mean, second_moment=rho / sigma2 + mean * mean, abs_max=math.inf
    )


def message_size_from_log(log_size: float) -> MessageSize:
    if log_size <= 0.0:
        return MessageSize(m=1, log_m=0.0)
    with localcontext() as ctx:
        ctx.prec = 60
        m = max(1, int(Decimal(log_size).exp()))
    return MessageSize(m=m, log_m=math.log(m))


def soft_covering_message_size(
    kind: LinkKind, n: int, params: AchievabilityParams, moments: InfoDensityMoments
) -> MessageSize:
    """(1 + delta2)(1 + nu2) n E[Willie-side information density]"""
    if n < 1:
        raise RangeViolation(f"n must be positive, got {n}")
    return message_size_from_log(params.resolvability_factor * n * moments.mean)


def reliability_log_size(n: int, params: AchievabilityParams, moments: InfoDensityMoments) -> float:
    """(1 - delta1)(1 - nu1) n E[Bob-side information density], before flooring"""
    return params.reliability_factor * n * moments.mean


def codebook_identifiable(reliability_log_m: float, resolvability_log_m: float) -> bool:
    """A codebook both reliable for Bob and resolvable at Willie exists"""
    return reliability_log_m > resolvability_log_m


def bernstein_tail(t: float, sum_second_moments: float, b: float) -> float:
    """exp(-t^2 / (2 (sum E[X^2] + b t / 3)))"""
    _require_positive(t=t, sum_second_moments=sum_second_moments, b=b)
    return math.exp(-t * t / (2.0 * (sum_second_moments + b * t / 3.0)))


def gaussian_sum_tail(t: float, sum_variances: float) -> float:
    """exp(-t^2 / (2 sum sigma_i^2))"""
    _require_positive(t=t, sum_variances=sum_variances)
    return math.exp(-t * t / (2.0 * sum_variances))


def chi_square_upper_tail(n: int, sigma2: float, c: float) -> float:
    """P((1/n) sum Z_i^2 - sigma2 > c) <= exp(-n c^2 / (4 sigma2^2 + 4 sigma2 c))"""
    _require_positive(sigma2=sigma2)
    if n < 1 or not 0.0 < c < n * sigma2:
        raise RangeViolation(f"chi-square tail needs 0 < c < n sigma^2, got c={c}, n={n}")
    return math.exp(-n * c * c / (4.0 * sigma2 * sigma2 + 4.0 * sigma2 * c))


def awgn_change_of_measure_penalty(n: int, rho: float, sigma_b2: float) -> LogPenalty:
    """log E[P_rho^n(Y) / P_0^n(Y)] = n ln cosh(rho / sigma_b^2) <= n rho^2 / (2 sigma_b^4)"""
    if n < 1:
        raise RangeViolation(f"n must be positive, got {n}")
    _require_positive(sigma_b2=sigma_b2)
    if rho < 0:
        raise NonPositiveArgument(f"rho must be non-negative, got {rho}")
    u = rho / sigma_b2
    return LogPenalty(exact=n * _log_cosh(u), bound=0.5 * n * u * u)


def converse_weight_threshold(n: int, L: int, chi2: float) -> float:
    """sqrt(2 n ln L / chi2): codewords above it are detectable"""
    _require_dimensions(n, L)
    _require_positive(chi2=chi2)
    return math.sqrt(2.0 * n * math.log(L) / chi2)


def converse_power_threshold(n: int, L: int, sigma_w2: float) -> float:
    """sqrt(4 sigma_w^4 n ln L): codewords above it are detectable"""
    _require_dimensions(n, L)
    _require_positive(sigma_w2=sigma_w2)
    return math.sqrt(4.0 * sigma_w2 * sigma_w2 * n * math.log(L))


def converse_test_threshold(
    kind: LinkKind, n: int, L: int, epsilon: float, stats: WillieStats
) -> float:
    """tau = eps sqrt(2 chi2 ln L / n) (DMC) or eps sqrt(4 sigma_w^4 ln L / n) (AWGN)"""
    _require_dimensions(n, L)
    if L < 2:
        raise RangeViolation(f"Converse threshold needs L >= 2, got {L}")
    if not epsilon > 1.0:
        raise RangeViolation(f"epsilon must exceed 1, got {epsilon}")
    if kind == LinkKind.DMC:
        return epsilon * math.sqrt(2.0 * stats.chi2 * math.log(L) / n)
    s2 = stats.sigma_w2
    return epsilon * math.sqrt(4.0 * s2 * s2 * math.log(L) / n)


def false_alarm_union_bound(
    kind: LinkKind, n: int, L: int, epsilon: float, stats: WillieStats
) -> float:
    """min(1, L * single-slot tail) for the max-slot test"""
    tau = converse_test_threshold(kind, n, L, epsilon, stats)
    if kind == LinkKind.DMC:
        tail = bernstein_tail(n * tau, n * stats.chi2, stats.c_max)
    elif tau < n * stats.sigma_w2:
        tail = chi_square_upper_tail(n, stats.sigma_w2, tau)
    else:
        tail = 0.0
    return min(1.0, L * tail)


def dmc_missed_detection_bound(
    n: int, L: int, epsilon: float, w_min: float, stats: WillieStats
) -> float:
    """Chebyshev bound on beta for codewords of weight at least w_min"""
    margin = w_min * stats.chi2 - epsilon * math.sqrt(2.0 * n * stats.chi2 * math.log(L))
    if margin <= 0.0:
        return math.inf
    sigma0 = math.sqrt(stats.var0)
    sigma1 = math.sqrt(stats.var1)
    excess = max(0.0, stats.var1 - stats.var0)
    spread = (sigma1 / sigma0) * w_min * excess if sigma0 > 0 else 0.0
    return (n * stats.var0 + spread) / (margin * margin)


def awgn_missed_detection_bound(
    n: int, L: int, epsilon: float, p_min: float, sigma_w2: float
) -> float:
    """Chebyshev bound on beta for codewords of power at least p_min"""
    margin = p_min - epsilon * math.sqrt(4.0 * n * sigma_w2 * sigma_w2 * math.log(L))
    if margin <= 0.0:
        return math.inf
    return (2.0 * n * sigma_w2 * sigma_w2 + 4.0 * sigma_w2 * p_min) / (margin * margin)


def normalized_throughput(log_m: float, n: int, L: int) -> float:
    """log M / sqrt(n ln L)"""
    if L < 2:
        raise RangeViolation(f"Normalized throughput needs L >= 2, got {L}")
    return log_m / math.sqrt(n * math.log(L))
