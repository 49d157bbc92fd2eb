"""Link simulation pipeline: plan blocklengths -> simulate each point -> collect rows"""

import asyncio
import logging
import time
from typing import Any, Dict, List, Optional, Tuple

from llama_index.core.workflow import (
    Context,
    Event,
    StartEvent,
    StopEvent,
    Workflow,
    step,
)

from src.adversary import TV_COST_CAP, mc_tv_estimate
from src.bounds import awgn_slot_kl_bound, dmc_slot_kl_bound, normalized_throughput, pinsker_tv_bound
from src.codec import LinkScenario, simulate_link
from src.errors import CovertnessInfeasible, InvalidParameters
from src.experiment_config import ExperimentConfig
from src.info_core import AwgnPair, Channel
from src.random_streams import Estimate, derive_seed
from src.settings import get_settings

logger = logging.getLogger(__name__)

# Error probability below which a point counts as reliable
RELIABILITY_TARGET = 0.05

SIMULATE_HEADER = [
    "n",
    "L",
    "log_M",
    "p_e_hat",
    "p_e_se",
    "tv_hat",
    "tv_se",
    "runtime_s",
    "tv_reference",
    "input_parameter",
    "gamma",
    "union_log_term",
    "normalized_throughput",
    "reliable",
    "status",
]


class ProgressEvent(Event):
    stage: str
    description: str
    progress: int = 0


class SimulationRowEvent(Event):
    row: Dict[str, Any]


class PointsPlannedEvent(Event):
    config: ExperimentConfig
    n_list: List[int]


class PointsSimulatedEvent(Event):
    rows: List[Dict[str, Any]]


def _infeasible_row(n: int, L: int, reason: str) -> Dict[str, Any]:
    row: Dict[str, Any] = {key: None for key in SIMULATE_HEADER}
    row.update(n=n, L=L, status=f"infeasible: {reason}")
    return row


def _analytic_tv(scenario: LinkScenario) -> float:
    """Pinsker bound on the slot-mixture TV implied by the KL slot bound"""
    if isinstance(scenario.channel, AwgnPair):
        bound = awgn_slot_kl_bound(
            scenario.n, scenario.L, scenario.input_parameter, scenario.channel.sigma_w2
        )
    else:
        chi2 = scenario.channel.information_terms().willie_chi2
        bound = dmc_slot_kl_bound(scenario.n, scenario.L, scenario.input_parameter, chi2)
    return pinsker_tv_bound(bound.exact_form)


def estimate_covertness(
    scenario: LinkScenario, trials: int, seed: int
) -> Tuple[Estimate, str]:
    """TV estimate and the law it refers to: codebook, mixture or pinsker_bound"""
    if trials == 0:
        return Estimate(_analytic_tv(scenario), 0.0), "pinsker_bound"
    codebook = scenario.codebook
    if not scenario.truncated and codebook.size * codebook.length * trials <= TV_COST_CAP:
        return mc_tv_estimate(codebook, scenario.L, scenario.channel, trials, seed), "codebook"
    estimate = mc_tv_estimate(
        None, scenario.L, scenario.channel, trials, seed, law=codebook.law, n=scenario.n
    )
    return estimate, "mixture"


def simulate_point(
    config: ExperimentConfig, channel: Channel, n: int, max_codewords: int
) -> Dict[str, Any]:
    """Build the scenario for one blocklength and measure reliability and covertness"""
    L = config.slots(n)
    started = time.perf_counter()
    seed = derive_seed(config.master_seed, n)
    try:
        scenario = LinkScenario.build(
            channel,
            n,
            L,
            config.achievability_params(),
            seed,
            max_codewords,
            strict_slot=config.strict_slot,
        )
    except (CovertnessInfeasible, InvalidParameters) as e:
        logger.warning(f"⚠️ Skipping n={n}, L={L}: {e}")
        return _infeasible_row(n, L, str(e))

    stats = simulate_link(scenario, config.trials, seed)
    tv, tv_reference = estimate_covertness(scenario, config.covertness_trials, seed)
    reliable = stats.p_e < RELIABILITY_TARGET and tv.value <= config.delta + 3.0 * tv.std_error
    return {
        "n": n,
        "L": L,
        "log_M": scenario.log_m,
        "p_e_hat": stats.p_e,
        "p_e_se": stats.p_e_se,
        "tv_hat": tv.value,
        "tv_se": tv.std_error,
        "runtime_s": round(time.perf_counter() - started, 3),
        "tv_reference": tv_reference,
        "input_parameter": scenario.input_parameter,
        "gamma": scenario.decoder.gamma,
        "union_log_term": stats.union_log_term,
        "normalized_throughput": normalized_throughput(scenario.log_m, n, L) if L >= 2 else None,
        "reliable": reliable,
        "status": "ok",
    }


def create_link_workflow(max_codewords: Optional[int] = None) -> "LinkSimulationWorkflow":
    settings = get_settings()
    return LinkSimulationWorkflow(
        max_codewords=max_codewords or settings.max_codewords, timeout=None
    )


class LinkSimulationWorkflow(Workflow):
    """Simulate every blocklength of an experiment, streaming one row per point"""

    def __init__(self, max_codewords: int, **kwargs: Any):
        super().__init__(**kwargs)
        self.max_codewords = max_codewords

    @step
    async def plan_points(self, ctx: Context, ev: StartEvent) -> PointsPlannedEvent:
        config: ExperimentConfig = ev.get("config")
        ctx.write_event_to_stream(
            ProgressEvent(
                stage="planning",
                description=f"Planning {len(config.n_list)} points for '{config.name}'",
            )
        )
        return PointsPlannedEvent(config=config, n_list=list(config.n_list))

    @step
    async def simulate_points(self, ctx: Context, ev: PointsPlannedEvent) -> PointsSimulatedEvent:
        config = ev.config
        channel = config.build_channel()
        max_codewords = config.max_codewords or self.max_codewords
        rows = []
        total = len(ev.n_list)
        for index, n in enumerate(ev.n_list):
            ctx.write_event_to_stream(
                ProgressEvent(
                    stage="simulating",
                    description=f"n={n}, L={config.slots(n)}",
                    progress=int(100 * index / total),
                )
            )
            row = await asyncio.to_thread(simulate_point, config, channel, n, max_codewords)
            rows.append(row)
            ctx.write_event_to_stream(SimulationRowEvent(row=row))
        return PointsSimulatedEvent(rows=rows)

    @step
    async def collect_rows(self, ctx: Context, ev: PointsSimulatedEvent) -> StopEvent:
        ctx.write_event_to_stream(
            ProgressEvent(stage="completed", description=f"{len(ev.rows)} points", progress=100)
        )
        return StopEvent(result=ev.rows)


def row_values(row: Dict[str, Any]) -> List[Any]:
    return [row.get(key) for key in SIMULATE_HEADER]

