"""
Codebooks, slotted framing, channel simulation and the per-slot decoder.

Binary codebooks store symbols as ``uint8`` with 0 meaning the innocent
symbol x0; BPSK codebooks store the real amplitudes ``+a``/``-a``. Slots are
numbered from 1 to L, messages from 0 to M - 1.
"""

import logging
import math
import struct
from enum import Enum
from pathlib import Path
from typing import Annotated, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.bounds import (
    AchievabilityParams,
    DensityReference,
    InfoDensityMoments,
    MessageSize,
    choose_alpha_n,
    choose_rho_n,
    info_density_moments_awgn,
    info_density_moments_dmc,
    message_size_from_log,
    reliability_log_size,
)
from src.errors import (
    CodebookFormatError,
    InvalidParameters,
    LengthMismatch,
    NonPositiveVariance,
    SlotOutOfRange,
)
from src.info_core import (
    AwgnPair,
    Channel,
    DmcPair,
    FiniteDistribution,
    LinkKind,
    channel_kind,
    check_alphabet,
)
from src.random_streams import (
    Estimate,
    StreamRole,
    TrialBlock,
    block_size_for,
    run_blocks,
    substream,
    trial_blocks,
)

logger = logging.getLogger(__name__)

# Finite stand-in for log(0) so that 0 * floor stays 0 in matrix products
LOG_FLOOR = -1.0e6
# Symbols scored per decoder chunk
DECODE_CHUNK_SYMBOLS = 1 << 18

CODEBOOK_MAGIC = b"CVSL"
CODEBOOK_VERSION = 1
# magic, version, kind, M, n, seed, law parameter
CODEBOOK_HEADER = struct.Struct("<4sBBIIQd")


class DmcBernoulli(BaseModel):
    """iid Bernoulli(alpha) symbols over {x0, x1}"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["dmc_bernoulli"] = "dmc_bernoulli"
    alpha: float

    @model_validator(mode="after")
    def _open_interval(self) -> "DmcBernoulli":
        if not 0.0 < self.alpha < 1.0:
            raise InvalidParameters(f"Codebook alpha must lie in (0, 1), got {self.alpha}")
        return self

    @property
    def parameter(self) -> float:
        return self.alpha


class Bpsk(BaseModel):
    """iid uniform +a / -a symbols"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["bpsk"] = "bpsk"
    amplitude: float

    @model_validator(mode="after")
    def _positive(self) -> "Bpsk":
        if not self.amplitude > 0:
            raise InvalidParameters(f"BPSK amplitude must be positive, got {self.amplitude}")
        return self

    @property
    def parameter(self) -> float:
        return self.amplitude


class ConstantWeight(BaseModel):
    """Exactly ``weight`` x1 symbols per codeword at uniform positions"""

    model_config = ConfigDict(frozen=True)

    kind: Literal["constant_weight"] = "constant_weight"
    weight: int = Field(ge=0)

    @property
    def parameter(self) -> float:
        return float(self.weight)


CodebookLaw = Annotated[Union[DmcBernoulli, Bpsk, ConstantWeight], Field(discriminator="kind")]

KIND_CODES = {"dmc_bernoulli": 1, "bpsk": 2, "constant_weight": 3}


def _law_from_code(code: int, parameter: float) -> CodebookLaw:
    if code == 1:
        return DmcBernoulli(alpha=parameter)
    if code == 2:
        return Bpsk(amplitude=parameter)
    if code == 3:
        return ConstantWeight(weight=int(parameter))
    raise CodebookFormatError(f"Unknown codebook kind code {code}")


class Codebook(BaseModel):
    """M codewords of length n, immutable once built"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    law: CodebookLaw = Field(description="Symbol law the codewords were drawn from")
    seed: int = Field(ge=0, lt=1 << 64, description="Generation seed")
    codewords: np.ndarray = Field(description="(M, n) symbol matrix")

    @model_validator(mode="after")
    def _well_formed(self) -> "Codebook":
        words = self.codewords
        if words.ndim != 2 or words.shape[0] < 1 or words.shape[1] < 1:
            raise InvalidParameters(f"Codebook must be a non-empty (M, n) matrix, got {words.shape}")
        if isinstance(self.law, Bpsk):
            if not np.all(np.abs(words) == self.law.amplitude):
                raise InvalidParameters("BPSK codewords must take values +a or -a")
        elif not np.all((words == 0) | (words == 1)):
            raise InvalidParameters("Binary codewords must take values 0 or 1")
        words.setflags(write=False)
        return self

    @property
    def size(self) -> int:
        return int(self.codewords.shape[0])

    @property
    def length(self) -> int:
        return int(self.codewords.shape[1])

    @property
    def link_kind(self) -> LinkKind:
        return LinkKind.AWGN if isinstance(self.law, Bpsk) else LinkKind.DMC

    @property
    def input_bias(self) -> float:
        """Fraction of x1 symbols the law puts in a codeword on average"""
        if isinstance(self.law, DmcBernoulli):
            return self.law.alpha
        if isinstance(self.law, ConstantWeight):
            return self.law.weight / self.length
        raise InvalidParameters("BPSK codebooks have no input bias")

    def weights(self) -> np.ndarray:
        """Number of x1 symbols per codeword"""
        if self.link_kind != LinkKind.DMC:
            raise InvalidParameters("Weights are defined for binary codebooks")
        return self.codewords.sum(axis=1, dtype=np.int64)

    def powers(self) -> np.ndarray:
        """Squared norm of each codeword"""
        return np.einsum("ij,ij->i", self.codewords, self.codewords, dtype=float)

    def subset(self, mask: np.ndarray) -> "Codebook":
        """Codebook of the selected rows; the selection must keep at least one"""
        return Codebook(law=self.law, seed=self.seed, codewords=np.array(self.codewords[mask]))

    def to_bytes(self) -> bytes:
        bits = self.codewords > 0 if isinstance(self.law, Bpsk) else self.codewords.astype(bool)
        header = CODEBOOK_HEADER.pack(
            CODEBOOK_MAGIC,
            CODEBOOK_VERSION,
            KIND_CODES[self.law.kind],
            self.size,
            self.length,
            self.seed,
            self.law.parameter,
        )
        return header + np.packbits(bits.ravel(), bitorder="little").tobytes()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Codebook":
        if len(data) < CODEBOOK_HEADER.size:
            raise CodebookFormatError("Truncated codebook header")
        magic, version, code, m, n, seed, parameter = CODEBOOK_HEADER.unpack_from(data)
        if magic != CODEBOOK_MAGIC:
            raise CodebookFormatError(f"Bad magic {magic!r}")
        if version != CODEBOOK_VERSION:
            raise CodebookFormatError(f"Unsupported codebook version {version}")
        law = _law_from_code(code, parameter)
        payload = data[CODEBOOK_HEADER.size :]
        if len(payload) != math.ceil(m * n / 8):
            raise CodebookFormatError(
                f"Payload holds {len(payload)} bytes, expected {math.ceil(m * n / 8)}"
            )
        bits = np.unpackbits(np.frombuffer(payload, dtype=np.uint8), count=m * n, bitorder="little")
        bits = bits.reshape(m, n)
        if isinstance(law, Bpsk):
            words = np.where(bits == 1, law.amplitude, -law.amplitude)
        else:
            words = bits.astype(np.uint8)
        return cls(law=law, seed=seed, codewords=words)

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.write_bytes(self.to_bytes())
        logger.info(f"💾 Saved {self.size}x{self.length} codebook to {path}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "Codebook":
        return cls.from_bytes(Path(path).read_bytes())


def _require_shape(M: int, n: int) -> None:
    if M < 1 or n < 1:
        raise InvalidParameters(f"Codebook needs M >= 1 and n >= 1, got M={M}, n={n}")


def generate_codebook(law: CodebookLaw, M: int, n: int, seed: int) -> Codebook:
    """Draw M iid codewords of length n; deterministic in ``seed``"""
    _require_shape(M, n)
    if isinstance(law, ConstantWeight):
        return generate_constant_weight_codebook(M, n, law.weight, seed)

    rng = substream(seed, StreamRole.CODEBOOK)
    if isinstance(law, DmcBernoulli):
        words = (rng.random((M, n)) < law.alpha).astype(np.uint8)
    else:
        signs = rng.integers(0, 2, size=(M, n))
        words = np.where(signs == 1, law.amplitude, -law.amplitude)
    logger.debug(f"🎲 Generated {law.kind} codebook M={M} n={n} seed={seed}")
    return Codebook(law=law, seed=seed, codewords=words)


def generate_constant_weight_codebook(M: int, n: int, weight: int, seed: int) -> Codebook:
    """Codewords with exactly ``weight`` ones at uniformly random positions"""
    _require_shape(M, n)
    if not 0 <= weight <= n:
        raise InvalidParameters(f"Weight must lie in [0, n={n}], got {weight}")
    rng = substream(seed, StreamRole.CODEBOOK)
    positions = np.argsort(rng.random((M, n)), axis=1)[:, :weight]
    words = np.zeros((M, n), dtype=np.uint8)
    words[np.arange(M)[:, None], positions] = 1
    return Codebook(law=ConstantWeight(weight=weight), seed=seed, codewords=words)


class SlottedFrame(BaseModel):
    """A codeword placed in slot ``slot`` of an otherwise innocent frame"""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    symbols: np.ndarray
    slot: int
    n: int = Field(ge=1)
    L: int = Field(ge=1)

    @model_validator(mode="after")
    def _innocent_outside_slot(self) -> "SlottedFrame":
        if not 1 <= self.slot <= self.L:
            raise SlotOutOfRange(f"Slot {self.slot} outside [1, {self.L}]")
        if self.symbols.shape != (self.n * self.L,):
            raise LengthMismatch(f"Frame holds {self.symbols.size} symbols, expected {self.n * self.L}")
        outside = np.ones(self.n * self.L, dtype=bool)
        outside[(self.slot - 1) * self.n : self.slot * self.n] = False
        if np.any(self.symbols[outside] != 0):
            raise InvalidParameters("Symbols outside the active slot must be x0")
        return self


def embed_in_slot(codeword: np.ndarray, t: int, L: int) -> SlottedFrame:
    """Place ``codeword`` in slot t (1-based) of an L-slot frame"""
    codeword = np.asarray(codeword)
    n = codeword.size
    if not 1 <= t <= L:
        raise SlotOutOfRange(f"Slot {t} outside [1, {L}]")
    symbols = np.zeros(n * L, dtype=codeword.dtype)
    symbols[(t - 1) * n : t * n] = codeword
    return SlottedFrame(symbols=symbols, slot=t, n=n, L=L)


def extract_slot(frame: Union[SlottedFrame, np.ndarray], t: int, n: int, L: int) -> np.ndarray:
    """Symbols of slot t; inverse of :func:`embed_in_slot` for the active slot"""
    symbols = frame.symbols if isinstance(frame, SlottedFrame) else np.asarray(frame)
    if symbols.size != n * L:
        raise LengthMismatch(f"Sequence holds {symbols.size} symbols, expected {n * L}")
    if not 1 <= t <= L:
        raise SlotOutOfRange(f"Slot {t} outside [1, {L}]")
    return symbols[(t - 1) * n : t * n]


def _frame_symbols(frame: Union[SlottedFrame, np.ndarray]) -> np.ndarray:
    return frame.symbols if isinstance(frame, SlottedFrame) else np.asarray(frame)


def dmc_output(
    symbols: np.ndarray,
    side: Tuple[FiniteDistribution, FiniteDistribution],
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw one output symbol per binary input by inverse-CDF sampling"""
    law0, law1 = side
    check_alphabet(law0, law1)
    last = law0.size - 1
    u = rng.random(symbols.shape)
    out0 = np.searchsorted(np.cumsum(law0.array), u, side="right")
    out1 = np.searchsorted(np.cumsum(law1.array), u, side="right")
    return np.minimum(np.where(symbols == 1, out1, out0), last).astype(np.int64)


def pass_dmc(
    frame: Union[SlottedFrame, np.ndarray],
    side: Tuple[FiniteDistribution, FiniteDistribution],
    seed: int,
) -> np.ndarray:
    """Send a binary frame through one side (Bob's or Willie's) of a DMC"""
    return dmc_output(_frame_symbols(frame), side, substream(seed, StreamRole.CHANNEL))


def awgn_output(symbols: np.ndarray, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    if sigma2 < 0:
        raise NonPositiveVariance(f"Noise variance must be non-negative, got {sigma2}")
    return symbols.astype(float) + math.sqrt(sigma2) * rng.standard_normal(symbols.shape)


def pass_awgn(frame: Union[SlottedFrame, np.ndarray], sigma2: float, seed: int) -> np.ndarray:
    """Add iid N(0, sigma2) noise; ``sigma2 == 0`` returns the input unchanged"""
    return awgn_output(_frame_symbols(frame), sigma2, substream(seed, StreamRole.CHANNEL))


class DecoderConfig(BaseModel):
    """Information-density threshold test applied slot by slot"""

    model_config = ConfigDict(frozen=True)

    gamma: float = Field(gt=0, description="Threshold on accumulated information density (nats)")
    reference: DensityReference = Field(
        default=DensityReference.MIXTURE, description="Output law in the density denominator"
    )


class ErasureReason(str, Enum):
    NO_HIT = "no_hit"
    AMBIGUOUS = "ambiguous"


class Found(BaseModel):
    model_config = ConfigDict(frozen=True)

    message: int = Field(ge=0)
    slot: int = Field(ge=1)


class Erasure(BaseModel):
    model_config = ConfigDict(frozen=True)

    reason: ErasureReason
    slot: Optional[int] = Field(default=None, description="Slot with several hits, if any")


Decision = Union[Found, Erasure]


def decoder_threshold(kind: LinkKind, n: int, nu1: float, moments: InfoDensityMoments) -> float:
    """gamma = (1 - nu1) n E[information density]"""
    if n < 1:
        raise InvalidParameters(f"n must be positive, got {n}")
    gamma = (1.0 - nu1) * n * moments.mean
    logger.debug(f"🔧 {kind.value} decoder threshold gamma={gamma:.6g}")
    return gamma


def message_size(
    kind: LinkKind, n: int, params: AchievabilityParams, moments: InfoDensityMoments
) -> MessageSize:
    """floor(exp((1 - delta1)(1 - nu1) n E[information density])), at least 1"""
    size = message_size_from_log(reliability_log_size(n, params, moments))
    logger.debug(f"🔧 {kind.value} message size log M={size.log_m:.6g}")
    return size


def _dmc_slot_densities(
    slots: np.ndarray,
    codebook: Codebook,
    side: Tuple[FiniteDistribution, FiniteDistribution],
    reference: DensityReference,
) -> np.ndarray:
    law0, law1 = side
    ref = law0.array
    if reference == DensityReference.MIXTURE:
        alpha = codebook.input_bias
        ref = (1.0 - alpha) * law0.array + alpha * law1.array
    with np.errstate(divide="ignore"):
        f0 = np.where(law0.array > 0, np.log(law0.array) - np.log(ref), LOG_FLOOR)
        f1 = np.where(law1.array > 0, np.log(law1.array) - np.log(ref), LOG_FLOOR)
    base = f0[slots].sum(axis=1)
    return base[:, None] + (f1 - f0)[slots] @ codebook.codewords.T.astype(float)


def _awgn_slot_densities(
    slots: np.ndarray, codebook: Codebook, sigma2: float, reference: DensityReference
) -> np.ndarray:
    correlation = slots @ codebook.codewords.T / sigma2
    if reference == DensityReference.PURE:
        return correlation - codebook.powers()[None, :] / (2.0 * sigma2)
    a = codebook.law.parameter
    u = a * slots / sigma2
    log_cosh = np.logaddexp(u, -u) - math.log(2.0)
    return correlation - log_cosh.sum(axis=1)[:, None]


def slot_densities(
    slots: np.ndarray, codebook: Codebook, channel: Channel, reference: DensityReference
) -> np.ndarray:
    """(slots, M) matrix of accumulated information densities on Bob's side"""
    if channel_kind(channel) != codebook.link_kind:
        raise InvalidParameters(
            f"{codebook.law.kind} codebook cannot be decoded over a {channel_kind(channel).value} channel"
        )
    if isinstance(channel, AwgnPair):
        return _awgn_slot_densities(slots, codebook, channel.sigma_b2, reference)
    return _dmc_slot_densities(slots, codebook, channel.bob_side, reference)


def _first_hit(densities: np.ndarray, gamma: float, start: int) -> Optional[Decision]:
    """Decision for the first slot of a chunk with any density above gamma"""
    hits = densities > gamma
    counts = hits.sum(axis=1)
    hit_slots = np.flatnonzero(counts)
    if hit_slots.size == 0:
        return None
    first = int(hit_slots[0])
    slot = start + first + 1
    if counts[first] == 1:
        return Found(message=int(np.flatnonzero(hits[first])[0]), slot=slot)
    return Erasure(reason=ErasureReason.AMBIGUOUS, slot=slot)


def decode_slotted(
    received: np.ndarray,
    codebook: Codebook,
    config: DecoderConfig,
    channel: Channel,
    L: Optional[int] = None,
) -> Decision:
    """
    Scan slots in order and stop at the first slot where some codeword's
    information density exceeds gamma; a unique hit is Found, several hits
    an Erasure.
    """
    n = codebook.length
    received = np.asarray(received)
    if L is None:
        L = max(1, received.size // n)
    if received.size != n * L:
        raise LengthMismatch(f"Received {received.size} symbols, expected n*L = {n * L}")

    slots = received.reshape(L, n)
    chunk = max(1, DECODE_CHUNK_SYMBOLS // n)
    for start in range(0, L, chunk):
        densities = slot_densities(slots[start : start + chunk], codebook, channel, config.reference)
        decision = _first_hit(densities, config.gamma, start)
        if decision is not None:
            return decision
    return Erasure(reason=ErasureReason.NO_HIT)


class LinkScenario(BaseModel):
    """Everything a link simulation needs, derived once from the channel and slacks"""

    model_config = ConfigDict(frozen=True)

    channel: Union[DmcPair, AwgnPair]
    n: int = Field(ge=1)
    L: int = Field(ge=1)
    params: AchievabilityParams
    codebook: Codebook
    decoder: DecoderConfig
    input_parameter: float = Field(description="alpha_n (DMC) or rho_n (AWGN)")
    log_m: float = Field(ge=0, description="log of the full message-set size")
    strict_slot: bool = Field(default=False, description="Count a wrong slot as an error")

    @property
    def kind(self) -> LinkKind:
        return channel_kind(self.channel)

    @property
    def truncated(self) -> bool:
        """The simulated codebook holds fewer codewords than the message set"""
        return self.log_m > math.log(self.codebook.size) + 1e-12

    @property
    def union_log_term(self) -> float:
        """log((M - M_sim) L) - gamma: weight of the unsimulated competitors"""
        if not self.truncated:
            return -math.inf
        unseen = self.log_m + math.log1p(-math.exp(math.log(self.codebook.size) - self.log_m))
        return unseen + math.log(self.L) - self.decoder.gamma

    @classmethod
    def build(
        cls,
        channel: Channel,
        n: int,
        L: int,
        params: AchievabilityParams,
        seed: int,
        max_codewords: int,
        strict_slot: bool = False,
    ) -> "LinkScenario":
        """Pick the input law, threshold and message size for (n, L, delta)"""
        kind = channel_kind(channel)
        if isinstance(channel, AwgnPair):
            rho = choose_rho_n(n, L, params.delta, channel.sigma_w2)
            moments = info_density_moments_awgn(rho, channel.sigma_b2)
            law: CodebookLaw = Bpsk(amplitude=math.sqrt(rho))
            reference = DensityReference.PURE
            input_parameter = rho
        else:
            alpha = choose_alpha_n(n, L, params.delta, channel.information_terms().willie_chi2)
            moments = info_density_moments_dmc(
                channel.p0, channel.p1, alpha, DensityReference.MIXTURE
            )
            law = DmcBernoulli(alpha=alpha)
            reference = DensityReference.MIXTURE
            input_parameter = alpha

        size = message_size(kind, n, params, moments)
        gamma = decoder_threshold(kind, n, params.nu1, moments)
        if not gamma > 0:
            raise InvalidParameters(f"Decoder threshold must be positive, got {gamma}")
        m_sim = min(size.m, max_codewords)
        codebook = generate_codebook(law, m_sim, n, seed)
        if m_sim < size.m:
            logger.info(
                f"⚠️ Simulating {m_sim} of e^{size.log_m:.1f} codewords (n={n}, L={L})"
            )
        return cls(
            channel=channel,
            n=n,
            L=L,
            params=params,
            codebook=codebook,
            decoder=DecoderConfig(gamma=gamma, reference=reference),
            input_parameter=input_parameter,
            log_m=size.log_m,
            strict_slot=strict_slot,
        )


class LinkStatistics(BaseModel):
    """Aggregated outcome of a link simulation"""

    trials: int
    errors: int
    slot_recovered: int = Field(description="Trials decoded with the right message and slot")
    wrong_message: int
    ambiguous: int
    no_hit: int
    p_e: float
    p_e_se: float
    union_log_term: float = Field(description="log((M - M_sim) L) - gamma")

    @property
    def estimate(self) -> Estimate:
        return Estimate(self.p_e, self.p_e_se)


def _transmit(scenario: LinkScenario, frame: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if isinstance(scenario.channel, AwgnPair):
        return awgn_output(frame, scenario.channel.sigma_b2, rng)
    return dmc_output(frame, scenario.channel.bob_side, rng)


def _decode_trial(scenario: LinkScenario, w: int, t: int, rng: np.random.Generator) -> Decision:
    """
    Same decision as decode_slotted on the full received frame, but channel
    outputs are drawn one chunk of slots at a time and only up to the
    first chunk with a hit.
    """
    n, L = scenario.n, scenario.L
    codebook = scenario.codebook
    chunk = max(1, DECODE_CHUNK_SYMBOLS // n)
    for start in range(0, L, chunk):
        stop = min(L, start + chunk)
        frame = np.zeros((stop - start, n), dtype=codebook.codewords.dtype)
        if start < t <= stop:
            frame[t - 1 - start] = codebook.codewords[w]
        received = _transmit(scenario, frame, rng)
        densities = slot_densities(received, codebook, scenario.channel, scenario.decoder.reference)
        decision = _first_hit(densities, scenario.decoder.gamma, start)
        if decision is not None:
            return decision
    return Erasure(reason=ErasureReason.NO_HIT)


def _run_trials(scenario: LinkScenario, seed: int, block: TrialBlock) -> np.ndarray:
    """Counts (errors, slot_recovered, wrong_message, ambiguous, no_hit) for one block"""
    counts = np.zeros(5, dtype=np.int64)
    for trial in range(block.start, block.start + block.count):
        rng = substream(seed, StreamRole.LINK_TRIAL, trial)
        w = int(rng.integers(scenario.codebook.size))
        t = int(rng.integers(1, scenario.L + 1))
        decision = _decode_trial(scenario, w, t, rng)

        if isinstance(decision, Erasure):
            counts[0] += 1
            counts[3 if decision.reason == ErasureReason.AMBIGUOUS else 4] += 1
        elif decision.message != w:
            counts[0] += 1
            counts[2] += 1
        elif decision.slot == t:
            counts[1] += 1
        elif scenario.strict_slot:
            counts[0] += 1
    return counts


def simulate_link(scenario: LinkScenario, trials: int, seed: int) -> LinkStatistics:
    """Monte Carlo over uniform (message, slot) and channel noise"""
    blocks = trial_blocks(trials, block_size_for(scenario.n * scenario.L))
    parts = run_blocks(lambda block: _run_trials(scenario, seed, block), blocks)
    errors, recovered, wrong, ambiguous, no_hit = (int(v) for v in np.sum(parts, axis=0))
    p_e = errors / trials
    logger.info(
        f"✅ Link n={scenario.n} L={scenario.L}: P_e={p_e:.4g} "
        f"({ambiguous} ambiguous, {no_hit} no-hit, {wrong} wrong message)"
    )
    return LinkStatistics(
        trials=trials,
        errors=errors,
        slot_recovered=recovered,
        wrong_message=wrong,
        ambiguous=ambiguous,
        no_hit=no_hit,
        p_e=p_e,
        p_e_se=math.sqrt(p_e * (1.0 - p_e) / trials),
        union_log_term=scenario.union_log_term,
    )


def estimate_error_prob(scenario: LinkScenario, trials: int, seed: int) -> Estimate:
    """Message error probability with its binomial standard error"""
    return simulate_link(scenario, trials, seed).estimate

