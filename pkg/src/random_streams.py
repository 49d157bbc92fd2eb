"""
Seeded random substreams and trial-block execution.

Every stochastic quantity is a pure function of ``(master_seed, role, index)``:
a trial (or a fixed-size block of trials) draws from its own
``SeedSequence``-derived generator, so results do not depend on how many
threads run the blocks or in which order they finish.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from enum import IntEnum
from typing import Callable, List, NamedTuple, Optional, TypeVar

import numpy as np

from src.errors import NonPositiveTrials
from src.settings import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")

# Upper bound on symbols generated per vectorized block
BLOCK_SYMBOL_BUDGET = 1 << 20
MAX_BLOCK_TRIALS = 4096


class StreamRole(IntEnum):
    """Disjoint stream families so codebooks, channels and tests never share draws"""

    CODEBOOK = 1
    CHANNEL = 2
    LINK_TRIAL = 3
    TV_ESTIMATE = 4
    KL_ESTIMATE = 5
    DETECT_H0 = 6
    DETECT_H1 = 7
    TEST_REGION = 8
    CHANNEL_DRAW = 9


class TrialBlock(NamedTuple):
    index: int
    start: int
    count: int


def substream(seed: int, role: int, index: int = 0) -> np.random.Generator:
    """Counter-style generator keyed by (seed, role, index)"""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(role), int(index)))
    return np.random.Generator(np.random.PCG64(sequence))


def block_size_for(frame_length: int) -> int:
    """Trials per block; depends only on the frame length"""
    return int(max(1, min(MAX_BLOCK_TRIALS, BLOCK_SYMBOL_BUDGET // max(1, frame_length))))


def trial_blocks(trials: int, block_size: int) -> List[TrialBlock]:
    """Split ``trials`` into consecutive fixed-size blocks"""
    if trials <= 0:
        raise NonPositiveTrials(f"trials must be positive, got {trials}")
    blocks = []
    for index, start in enumerate(range(0, trials, block_size)):
        blocks.append(TrialBlock(index, start, min(block_size, trials - start)))
    return blocks


def run_blocks(
    fn: Callable[[TrialBlock], T],
    blocks: List[TrialBlock],
    threads: Optional[int] = None,
) -> List[T]:
    """Run ``fn`` over blocks, returning results in block order"""
    workers = min(threads or get_settings().threads, len(blocks))
    if workers <= 1:
        return [fn(block) for block in blocks]

    logger.debug(f"🎲 Running {len(blocks)} trial blocks on {workers} threads")
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, blocks))


class Estimate(NamedTuple):
    value: float
    std_error: float


class MomentSums(NamedTuple):
    """Associative accumulator for a sample mean and its standard error"""

    count: int = 0
    total: float = 0.0
    total_sq: float = 0.0

    @classmethod
    def of(cls, samples: np.ndarray) -> "MomentSums":
        samples = np.asarray(samples, dtype=float)
        return cls(int(samples.size), float(samples.sum()), float(np.dot(samples, samples)))

    def merge(self, other: "MomentSums") -> "MomentSums":
        return MomentSums(
            self.count + other.count,
            self.total + other.total,
            self.total_sq + other.total_sq,
        )

    def estimate(self) -> Estimate:
        if self.count == 0:
            raise NonPositiveTrials("No samples accumulated")
        mean = self.total / self.count
        if self.count < 2:
            return Estimate(mean, float("inf"))
        variance = max(0.0, (self.total_sq - self.count * mean * mean) / (self.count - 1))
        return Estimate(mean, float(np.sqrt(variance / self.count)))


def merge_all(parts: List[MomentSums]) -> MomentSums:
    merged = MomentSums()
    for part in parts:
        merged = merged.merge(part)
    return merged


def derive_seed(master_seed: int, *keys: int) -> int:
    """64-bit child seed for an experiment point, e.g. one blocklength"""
    sequence = np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])
