"""Experiment manifests: YAML or TOML files validated into ExperimentConfig."""

import logging
import math
import tomllib
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Optional, Sequence, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.bounds import DEFAULT_EPSILON, AchievabilityParams
from src.errors import ConfigurationError
from src.info_core import AwgnPair, Channel, DmcPair, load_channel

logger = logging.getLogger(__name__)


class DmcChannelSpec(BaseModel):
    """Binary-input DMC given by its four output laws"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["dmc"] = "dmc"
    p0: List[float] = Field(description="Bob's output law for x0")
    p1: List[float] = Field(description="Bob's output law for x1")
    q0: List[float] = Field(description="Willie's output law for x0")
    q1: List[float] = Field(description="Willie's output law for x1")

    def build(self) -> Channel:
        return load_channel(self.model_dump(exclude={"kind"}))


class BscChannelSpec(BaseModel):
    """Binary symmetric channels to Bob and to Willie"""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["bsc"] = "bsc"
    bob_crossover: float = Field(ge=0, le=1)
    willie_crossover: float = Field(ge=0, le=1)

    def build(self) -> Channel:
        return DmcPair.from_bsc(self.bob_crossover, self.willie_crossover)


class AwgnChannelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["awgn"] = "awgn"
    sigma_b2: float = Field(gt=0, description="Bob noise variance")
    sigma_w2: float = Field(gt=0, description="Willie noise variance")

    def build(self) -> Channel:
        return AwgnPair(sigma_b2=self.sigma_b2, sigma_w2=self.sigma_w2)


ChannelSpec = Annotated[
    Union[DmcChannelSpec, BscChannelSpec, AwgnChannelSpec], Field(discriminator="kind")
]


class FixedSlots(BaseModel):
    model_config = ConfigDict(extra="forbid")

    rule: Literal["fixed"] = "fixed"
    L: int = Field(ge=1, description="Slot count used for every n")

    def slots(self, n: int) -> int:
        return self.L


class PolynomialSlots(BaseModel):
    """L_n = ceil(n^kappa), sub-exponential for every kappa > 0"""

    model_config = ConfigDict(extra="forbid")

    rule: Literal["polynomial"] = "polynomial"
    kappa: float = Field(default=1.0, gt=0)

    def slots(self, n: int) -> int:
        # Round first so exact powers such as 10000^1.0 do not tip over
        return max(1, math.ceil(round(n**self.kappa, 9)))


SlotRule = Annotated[Union[FixedSlots, PolynomialSlots], Field(discriminator="rule")]


class SlackParams(BaseModel):
    model_config = ConfigDict(extra="forbid")

    nu1: float = Field(default=0.25, gt=0, lt=1)
    nu2: float = Field(default=0.25, gt=0, lt=1)
    delta1: float = Field(default=0.25, gt=0, lt=1)
    delta2: float = Field(default=0.25, gt=0, lt=1)
    epsilon: float = Field(default=DEFAULT_EPSILON, gt=1)


class OracleGrid(BaseModel):
    """Enumeration grid certified by oracle-check"""

    model_config = ConfigDict(extra="forbid")

    n_max: int = Field(default=3, ge=1)
    L_max: int = Field(default=3, ge=1)
    alphas: List[float] = Field(default_factory=lambda: [round(0.1 * k, 1) for k in range(1, 10)])
    channels: int = Field(default=20, ge=1, description="Random binary-output Willie channels")
    channel_seed: int = Field(default=0, ge=0)
    min_chi2: float = Field(default=0.01, gt=0)
    bound_scale: float = Field(
        default=1.0, gt=0, description="Multiplier on the slot bounds; below 1 is a negative control"
    )
    codebooks: int = Field(default=10, ge=0, description="Enumerated codebook instances")
    codebook_n: int = Field(default=2, ge=1)
    codebook_L: int = Field(default=2, ge=1)
    codebook_size: int = Field(default=8, ge=1, le=16)
    codebook_alpha: float = Field(default=0.3, gt=0, lt=1)
    tests_per_instance: int = Field(default=20, ge=0)
    tv_trials: int = Field(default=20_000, ge=0, description="Monte Carlo TV cross-check; 0 skips it")


class ExperimentConfig(BaseModel):
    """One reproducible experiment manifest"""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(default="experiment")
    description: Optional[str] = None
    channel: ChannelSpec
    n_list: List[int] = Field(min_length=1, description="Blocklengths per slot")
    slot_rule: SlotRule = Field(default_factory=PolynomialSlots)
    delta: float = Field(default=0.5, gt=0, lt=1, description="Covertness budget")
    slack: SlackParams = Field(default_factory=SlackParams)
    trials: int = Field(default=2000, ge=1)
    tv_trials: Optional[int] = Field(
        default=None, ge=0, description="Covertness trials; None reuses trials, 0 reports the analytic bound"
    )
    master_seed: int = Field(default=0, ge=0)
    output_dir: Path = Field(default=Path("results"))
    max_codewords: Optional[int] = Field(default=None, ge=1)
    detect_codewords: int = Field(default=256, ge=1)
    weight_factor: float = Field(default=1.5, gt=0)
    strict_slot: bool = False
    roc_taus: Optional[List[float]] = None
    oracle: OracleGrid = Field(default_factory=OracleGrid)

    @field_validator("n_list")
    @classmethod
    def _positive_lengths(cls, values: List[int]) -> List[int]:
        if any(n < 1 for n in values):
            raise ValueError(f"Every n must be a positive integer, got {values}")
        return values

    def build_channel(self) -> Channel:
        return self.channel.build()

    def slots(self, n: int) -> int:
        return self.slot_rule.slots(n)

    def achievability_params(self) -> AchievabilityParams:
        return AchievabilityParams(delta=self.delta, **self.slack.model_dump())

    @property
    def covertness_trials(self) -> int:
        return self.trials if self.tv_trials is None else self.tv_trials


def _read_manifest(path: Path) -> Dict[str, Any]:
    suffix = path.suffix.lower()
    try:
        if suffix in (".yaml", ".yml"):
            with open(path, "r") as f:
                data = yaml.safe_load(f)
        elif suffix == ".toml":
            with open(path, "rb") as f:
                data = tomllib.load(f)
        else:
            raise ConfigurationError(f"Unsupported manifest format '{suffix}' ({path})")
    except (yaml.YAMLError, tomllib.TOMLDecodeError) as e:
        raise ConfigurationError(f"Cannot parse {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigurationError(f"Manifest {path} must contain a mapping")
    return data


def load_experiment(path: Union[str, Path]) -> ExperimentConfig:
    """Load and validate an experiment manifest"""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Manifest not found: {path}")
    data = _read_manifest(path)
    data.pop("$schema", None)
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid manifest {path}: {e}") from e
    logger.debug(f"🔧 Loaded experiment '{config.name}' from {path}")
    return config


def apply_overrides(
    config: ExperimentConfig,
    n: Sequence[int] = (),
    L: Optional[int] = None,
    delta: Optional[float] = None,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    out: Optional[Path] = None,
) -> ExperimentConfig:
    """Flag values win over manifest values; the result is validated again"""
    updates: Dict[str, Any] = {}
    if n:
        updates["n_list"] = list(n)
    if L is not None:
        updates["slot_rule"] = {"rule": "fixed", "L": L}
    if delta is not None:
        updates["delta"] = delta
    if trials is not None:
        updates["trials"] = trials
    if seed is not None:
        updates["master_seed"] = seed
    if out is not None:
        updates["output_dir"] = out
    if not updates:
        return config
    try:
        return ExperimentConfig.model_validate({**config.model_dump(), **updates})
    except ValidationError as e:
        raise ConfigurationError(f"Invalid override: {e}") from e
