"""Command-line experiment runner: bounds, simulate, detect, sweep, oracle-check"""

import asyncio
import functools
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import click
from pydantic import BaseModel, Field, ValidationError

from src import __version__
from src.adversary import (
    DetectionKind,
    DetectionTest,
    detection_diagnostics,
    enumerated_test_errors,
    estimate_roc,
    max_slot_test_region,
    mc_tv_estimate,
    random_deterministic_tests,
    roc_sweep,
    write_roc_csv,
)
from src.bounds import (
    AchievabilityParams,
    DensityReference,
    WillieStats,
    awgn_capacity_bounds,
    awgn_slot_kl_bound,
    choose_alpha_n,
    choose_rho_n,
    codebook_identifiable,
    converse_power_threshold,
    converse_test_threshold,
    converse_weight_threshold,
    dmc_capacity_bounds,
    dmc_slot_kl_bound,
    false_alarm_union_bound,
    info_density_moments_awgn,
    info_density_moments_dmc,
    key_throughput,
    soft_covering_message_size,
)
from src.codec import (
    Bpsk,
    Codebook,
    DmcBernoulli,
    decoder_threshold,
    generate_codebook,
    generate_constant_weight_codebook,
    message_size,
)
from src.errors import (
    CovertnessInfeasible,
    CovertSlotError,
    KeylessConditionViolated,
    TooLargeToEnumerate,
)
from src.experiment_config import ExperimentConfig, OracleGrid, apply_overrides, load_experiment
from src.experiment_workflow import (
    SIMULATE_HEADER,
    ProgressEvent,
    SimulationRowEvent,
    create_link_workflow,
    row_values,
)
from src.info_core import AwgnPair, Channel, DmcPair, channel_kind
from src.oracle import (
    ExactInstance,
    check_enumerable,
    exact_induced_law,
    exact_kl,
    exact_mixture_law,
    exact_null_law,
    exact_tv,
    random_binary_channel,
    single_slot_laws,
)
from src.random_streams import derive_seed
from src.reports import ThroughputSeries, plot_throughput, write_csv, write_json
from src.settings import init_settings

DETECT_HEADER = [
    "n",
    "L",
    "branch",
    "tau",
    "alpha_hat",
    "beta_hat",
    "sum",
    "alpha_se",
    "beta_se",
    "codeword_weight",
    "low_fraction",
    "false_alarm_bound",
    "missed_detection_bound",
    "status",
]
SWEEP_HEADER = SIMULATE_HEADER + ["lower_bound", "upper_bound", "target"]
ORACLE_TOLERANCE = 1e-9


# Bounds report


def _capacity_section(channel: Channel) -> Dict[str, Any]:
    if isinstance(channel, AwgnPair):
        try:
            bounds = awgn_capacity_bounds(channel)
        except KeylessConditionViolated as e:
            return {"status": f"keyless condition violated: {e}"}
        return {"lower": bounds.lower, "upper": bounds.upper}

    section: Dict[str, Any] = {"key_throughput": key_throughput(channel)}
    try:
        bounds = dmc_capacity_bounds(channel)
    except KeylessConditionViolated as e:
        # Still achievable with a pre-shared key
        bounds = dmc_capacity_bounds(channel, require_keyless=False)
        section["status"] = f"keyless condition violated: {e}"
    section.update(lower=bounds.lower, upper=bounds.upper)
    return section


def _bounds_point(
    channel: Channel, n: int, L: int, params: AchievabilityParams
) -> Dict[str, Any]:
    kind = channel_kind(channel)
    point: Dict[str, Any] = {"n": n, "L": L}
    try:
        if isinstance(channel, AwgnPair):
            rho = choose_rho_n(n, L, params.delta, channel.sigma_w2)
            bob = info_density_moments_awgn(rho, channel.sigma_b2)
            willie = info_density_moments_awgn(rho, channel.sigma_w2)
            slot_bound = awgn_slot_kl_bound(n, L, rho, channel.sigma_w2)
            point.update(rho_n=rho, converse_threshold=converse_power_threshold(n, L, channel.sigma_w2))
        else:
            chi2 = channel.information_terms().willie_chi2
            alpha = choose_alpha_n(n, L, params.delta, chi2)
            bob = info_density_moments_dmc(channel.p0, channel.p1, alpha, DensityReference.MIXTURE)
            willie = info_density_moments_dmc(channel.q0, channel.q1, alpha, DensityReference.MIXTURE)
            slot_bound = dmc_slot_kl_bound(n, L, alpha, chi2)
            point.update(alpha_n=alpha, converse_threshold=converse_weight_threshold(n, L, chi2))
    except CovertnessInfeasible as e:
        point.update(status="infeasible", reason=str(e))
        return point

    reliable = message_size(kind, n, params, bob)
    resolvable = soft_covering_message_size(kind, n, params, willie)
    point.update(
        gamma=decoder_threshold(kind, n, params.nu1, bob),
        log_M=reliable.log_m,
        soft_covering_log_M=resolvable.log_m,
        identifiable=codebook_identifiable(reliable.log_m, resolvable.log_m),
        kl_bound_exact=slot_bound.exact_form,
        kl_bound_exp=slot_bound.exp_form,
        status="ok",
    )
    if L >= 2:
        stats = WillieStats.from_channel(channel)
        point.update(
            tau=converse_test_threshold(kind, n, L, params.epsilon, stats),
            false_alarm_bound=false_alarm_union_bound(kind, n, L, params.epsilon, stats),
        )
    return point


def cmd_bounds(config: ExperimentConfig) -> Dict[str, Any]:
    """Closed-form report: capacity bounds and per-n operating parameters"""
    channel = config.build_channel()
    params = config.achievability_params()
    report = {
        "name": config.name,
        "channel": config.channel.model_dump(),
        "delta": config.delta,
        "slack": config.slack.model_dump(),
        "capacity": _capacity_section(channel),
        "points": [_bounds_point(channel, n, config.slots(n), params) for n in config.n_list],
    }
    write_json(config.output_dir / f"{config.name}_bounds.json", report)
    return report


# Link simulation


async def _run_link_workflow(config: ExperimentConfig, rows: List[Dict[str, Any]]) -> None:
    workflow = create_link_workflow(config.max_codewords)
    handler = workflow.run(config=config)
    async for event in handler.stream_events():
        if isinstance(event, ProgressEvent):
            click.echo(f"🔧 {event.stage}: {event.description}")
        elif isinstance(event, SimulationRowEvent):
            rows.append(event.row)
            row = event.row
            if row["status"] == "ok":
                click.echo(
                    f"✅ n={row['n']} L={row['L']} log M={row['log_M']:.2f} "
                    f"P_e={row['p_e_hat']:.4f} TV={row['tv_hat']:.4f} ({row['tv_reference']})"
                )
            else:
                click.echo(f"⚠️ n={row['n']} L={row['L']}: {row['status']}")
    await handler


def cmd_simulate(config: ExperimentConfig, rows: Optional[List[Dict[str, Any]]] = None) -> List[Dict[str, Any]]:
    """Reliability and covertness per blocklength; rows stream into ``rows``"""
    rows = [] if rows is None else rows
    asyncio.run(_run_link_workflow(config, rows))
    write_csv(config.output_dir / f"{config.name}_simulate.csv", SIMULATE_HEADER, map(row_values, rows))
    return rows


def _throughput_lines(channel: Channel, params: AchievabilityParams) -> Optional[Dict[str, float]]:
    capacity = _capacity_section(channel)
    if "lower" not in capacity:
        return None
    return {
        "lower_bound": capacity["lower"],
        "upper_bound": capacity["upper"],
        "target": (1.0 - params.xi) * capacity["lower"],
    }


def achieved_series(rows: List[Dict[str, Any]], lines: Dict[str, float]) -> Optional[ThroughputSeries]:
    """Reliable and covert points only; None when there is nothing to draw"""
    plotted = [
        r for r in rows if r["status"] == "ok" and r.get("reliable") and r["normalized_throughput"] is not None
    ]
    if not lines or not plotted:
        return None
    return ThroughputSeries(
        n=[r["n"] for r in plotted],
        achieved=[r["normalized_throughput"] for r in plotted],
        lower=lines["lower_bound"],
        upper=lines["upper_bound"],
        target=lines["target"],
    )


def cmd_sweep(config: ExperimentConfig, rows: Optional[List[Dict[str, Any]]] = None) -> List[Dict[str, Any]]:
    """Normalized throughput against n, with the capacity bound lines"""
    rows = [] if rows is None else rows
    asyncio.run(_run_link_workflow(config, rows))
    lines = _throughput_lines(config.build_channel(), config.achievability_params()) or {}
    for row in rows:
        row.update({key: lines.get(key) for key in ("lower_bound", "upper_bound", "target")})

    write_csv(
        config.output_dir / f"{config.name}_sweep.csv",
        SWEEP_HEADER,
        ([row.get(key) for key in SWEEP_HEADER] for row in rows),
    )
    series = achieved_series(rows, lines)
    if series is not None:
        plot_throughput(config.output_dir / f"{config.name}_sweep.svg", series, config.name)
    return rows


# Detection experiments


def _above_threshold_codebook(
    channel: Channel, n: int, L: int, config: ExperimentConfig, seed: int
) -> Codebook:
    """Constant weight (DMC) or constant power (AWGN) at weight_factor x the converse threshold"""
    if isinstance(channel, AwgnPair):
        power = config.weight_factor * converse_power_threshold(n, L, channel.sigma_w2)
        return generate_codebook(Bpsk(amplitude=math.sqrt(power / n)), config.detect_codewords, n, seed)
    chi2 = channel.information_terms().willie_chi2
    weight = min(n, math.ceil(config.weight_factor * converse_weight_threshold(n, L, chi2)))
    return generate_constant_weight_codebook(config.detect_codewords, n, weight, seed)


def _achievability_codebook(
    channel: Channel, n: int, L: int, config: ExperimentConfig, seed: int
) -> Codebook:
    if isinstance(channel, AwgnPair):
        rho = choose_rho_n(n, L, config.delta, channel.sigma_w2)
        return generate_codebook(Bpsk(amplitude=math.sqrt(rho)), config.detect_codewords, n, seed)
    alpha = choose_alpha_n(n, L, config.delta, channel.information_terms().willie_chi2)
    return generate_codebook(DmcBernoulli(alpha=alpha), config.detect_codewords, n, seed)


def _detect_row(
    config: ExperimentConfig, channel: Channel, n: int, L: int, branch: str, branch_index: int
) -> Dict[str, Any]:
    row: Dict[str, Any] = {"n": n, "L": L, "branch": branch}
    seed = derive_seed(config.master_seed, n, branch_index)
    build = _above_threshold_codebook if branch == "above" else _achievability_codebook
    try:
        codebook = build(channel, n, L, config, seed)
    except CovertnessInfeasible as e:
        row["status"] = f"infeasible: {e}"
        return row

    epsilon = config.slack.epsilon
    kind = DetectionKind.for_link(channel_kind(channel))
    test = DetectionTest.converse(kind, n, L, epsilon, WillieStats.from_channel(channel))
    point = estimate_roc(codebook, L, channel, test, config.trials, seed)
    diagnostics = detection_diagnostics(codebook, L, channel, epsilon)
    if config.roc_taus:
        sweep = roc_sweep(codebook, L, channel, kind, config.roc_taus, config.trials, seed)
        write_roc_csv(config.output_dir / f"{config.name}_roc_n{n}_{branch}.csv", sweep)
    row.update(
        tau=test.tau,
        alpha_hat=point.false_alarm,
        beta_hat=point.missed_detection,
        sum=point.total,
        alpha_se=point.std_errors[0],
        beta_se=point.std_errors[1],
        codeword_weight=diagnostics.smallest,
        low_fraction=diagnostics.low_fraction,
        false_alarm_bound=diagnostics.false_alarm_bound,
        missed_detection_bound=diagnostics.missed_detection_bound,
        status="ok",
    )
    return row


def cmd_detect(config: ExperimentConfig, rows: Optional[List[Dict[str, Any]]] = None) -> List[Dict[str, Any]]:
    """Max-slot test against above-threshold and achievability codebooks"""
    rows = [] if rows is None else rows
    channel = config.build_channel()
    for n in config.n_list:
        L = config.slots(n)
        for branch_index, branch in enumerate(("above", "below")):
            if L < 2:
                rows.append({"n": n, "L": L, "branch": branch, "status": "infeasible: L < 2"})
                continue
            row = _detect_row(config, channel, n, L, branch, branch_index)
            rows.append(row)
            if row["status"] == "ok":
                click.echo(
                    f"✅ n={n} L={L} {branch}: alpha={row['alpha_hat']:.4f} "
                    f"beta={row['beta_hat']:.4f} sum={row['sum']:.4f}"
                )
            else:
                click.echo(f"⚠️ n={n} L={L} {branch}: {row['status']}")
    write_csv(
        config.output_dir / f"{config.name}_detect.csv",
        DETECT_HEADER,
        ([row.get(key) for key in DETECT_HEADER] for row in rows),
    )
    return rows


# Oracle certification


class OracleCheck(BaseModel):
    name: str
    instances: int = 0
    failures: int = 0
    skipped: int = 0
    worst_margin: float = Field(default=math.inf, description="Smallest slack seen (negative on failure)")

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def record(self, margin: float) -> None:
        self.instances += 1
        self.worst_margin = min(self.worst_margin, margin)
        if margin < 0:
            self.failures += 1


def _slot_kl_checks(grid: OracleGrid, channels: List[DmcPair]) -> List[OracleCheck]:
    dominance = OracleCheck(name="slot_kl_dominance")
    pinsker = OracleCheck(name="pinsker")
    for channel in channels:
        chi2 = channel.information_terms().willie_chi2
        for n in range(1, grid.n_max + 1):
            for L in range(1, grid.L_max + 1):
                try:
                    check_enumerable(channel.q0.size, n * L)
                except TooLargeToEnumerate:
                    dominance.skipped += 1
                    continue
                for alpha in grid.alphas:
                    instance = ExactInstance(n=n, L=L, channel=channel, alpha=alpha)
                    mixture_law, null_law = exact_mixture_law(instance), exact_null_law(instance)
                    kl = exact_kl(mixture_law, null_law)
                    bound = dmc_slot_kl_bound(n, L, alpha, chi2)
                    limit = grid.bound_scale * min(bound.exact_form, bound.exp_form)
                    dominance.record(limit + ORACLE_TOLERANCE - kl)
                    pinsker.record(math.sqrt(kl / 2.0) + ORACLE_TOLERANCE - exact_tv(mixture_law, null_law))
    return [dominance, pinsker]


def _codebook_checks(grid: OracleGrid, channels: List[DmcPair], epsilon: float) -> List[OracleCheck]:
    convexity = OracleCheck(name="slot_convexity")
    testing = OracleCheck(name="hypothesis_testing")
    cross = OracleCheck(name="tv_cross_check")
    n, L = grid.codebook_n, grid.codebook_L
    for index in range(grid.codebooks):
        channel = channels[index % len(channels)]
        seed = derive_seed(grid.channel_seed, index)
        codebook = generate_codebook(DmcBernoulli(alpha=grid.codebook_alpha), grid.codebook_size, n, seed)
        instance = ExactInstance(n=n, L=L, channel=channel, codebook=codebook, alpha=grid.codebook_alpha)
        ideal = ExactInstance(n=n, L=L, channel=channel, alpha=grid.codebook_alpha)
        induced, null_law = exact_induced_law(instance), exact_null_law(instance)

        slot_induced, slot_mixture = single_slot_laws(instance)
        convexity.record(
            exact_tv(slot_induced, slot_mixture) + ORACLE_TOLERANCE - exact_tv(induced, exact_mixture_law(ideal))
        )

        tv = exact_tv(induced, null_law)
        regions = random_deterministic_tests(induced.probs.size, grid.tests_per_instance, seed)
        if L >= 2:
            stats = WillieStats.from_channel(channel)
            test = DetectionTest.converse(DetectionKind.DMC_WEIGHT, n, L, epsilon, stats)
            regions.append(max_slot_test_region(instance, test))
        for region in regions:
            alpha_err, beta_err = enumerated_test_errors(region, induced, null_law)
            testing.record(alpha_err + beta_err - (1.0 - tv) + ORACLE_TOLERANCE)

        if grid.tv_trials > 0:
            estimate = mc_tv_estimate(codebook, L, channel, grid.tv_trials, seed)
            cross.record(3.0 * estimate.std_error + 1e-12 - abs(estimate.value - tv))
    checks = [convexity, testing]
    if grid.tv_trials > 0:
        checks.append(cross)
    return checks


def cmd_oracle_check(config: ExperimentConfig) -> Dict[str, Any]:
    """Certify bounds and estimators against exact enumeration"""
    grid = config.oracle
    channels = [random_binary_channel(grid.channel_seed, i, grid.min_chi2) for i in range(grid.channels)]
    checks = _slot_kl_checks(grid, channels) + _codebook_checks(grid, channels, config.slack.epsilon)
    for check in checks:
        if check.skipped:
            click.echo(f"⚠️ {check.name}: skipped {check.skipped} grid sizes too large to enumerate")
        mark = "✅" if check.passed else "❌"
        click.echo(f"{mark} {check.name}: {check.instances - check.failures}/{check.instances} passed")
    report = {
        "name": config.name,
        "bound_scale": grid.bound_scale,
        "passed": all(c.passed for c in checks),
        "checks": [c.model_dump() | {"passed": c.passed} for c in checks],
    }
    write_json(config.output_dir / f"{config.name}_oracle.json", report)
    return report


# Click surface


def _fail(error: Exception, rows: Optional[List[Dict[str, Any]]] = None, writer: Optional[Callable] = None) -> None:
    click.echo(f"❌ {type(error).__name__}: {error}", err=True)
    if writer is not None and rows is not None:
        try:
            writer(rows, f"error: {type(error).__name__}: {error}")
            click.echo(f"💾 Kept {len(rows)} completed rows", err=True)
        except OSError as write_error:
            click.echo(f"❌ Could not write partial results: {write_error}", err=True)
    sys.exit(1)


def experiment_options(fn: Callable) -> Callable:
    """Manifest path plus the flag overrides shared by every subcommand"""

    @click.argument("manifest", type=click.Path(exists=True, dir_okay=False, path_type=Path))
    @click.option("--n", "n_values", type=int, multiple=True, help="Blocklength per slot (repeatable)")
    @click.option("--L", "slot_count", type=int, help="Fixed slot count for every n")
    @click.option("--delta", type=float, help="Covertness budget")
    @click.option("--trials", type=int, help="Monte Carlo trials per point")
    @click.option("--seed", type=int, help="Master seed")
    @click.option("--out", type=click.Path(file_okay=False, path_type=Path), help="Output directory")
    @functools.wraps(fn)
    def wrapper(manifest, n_values, slot_count, delta, trials, seed, out, **kwargs):
        try:
            config = apply_overrides(
                load_experiment(manifest),
                n=n_values,
                L=slot_count,
                delta=delta,
                trials=trials,
                seed=seed,
                out=out,
            )
        except (CovertSlotError, ValidationError) as e:
            _fail(e)
        click.echo(f"🚀 {fn.__name__.replace('_', '-')}: {config.name}")
        return fn(config, **kwargs)

    return wrapper


@click.group(invoke_without_command=True)
@click.option("--version", is_flag=True, help="Show version")
@click.option("--threads", type=int, help="Worker threads (overrides COVERTSLOT_THREADS)")
@click.option("--log-level", type=str, help="Log level (overrides COVERTSLOT_LOG_LEVEL)")
@click.pass_context
def cli(ctx, version, threads, log_level):
    """Covert communication with random slot selection: bounds, simulation and certification"""
    if version:
        click.echo(f"covertslot v{__version__}")
        return
    try:
        init_settings(threads=threads, log_level=log_level)
    except CovertSlotError as e:
        _fail(e)
    if ctx.invoked_subcommand is None:
        click.echo(ctx.get_help())


@cli.command()
@experiment_options
def bounds(config: ExperimentConfig):
    """Evaluate capacity bounds and per-n operating parameters"""
    try:
        report = cmd_bounds(config)
    except (CovertSlotError, ValidationError) as e:
        _fail(e)
    infeasible = sum(1 for p in report["points"] if p["status"] != "ok")
    click.echo(f"✅ {len(report['points'])} points ({infeasible} infeasible)")


def _csv_writer(config: ExperimentConfig, suffix: str, header: List[str]) -> Callable:
    def write(rows: List[Dict[str, Any]], status: str) -> None:
        write_csv(
            config.output_dir / f"{config.name}_{suffix}.csv",
            header,
            ([row.get(key) for key in header] for row in rows),
            status=status,
        )

    return write


@cli.command()
@experiment_options
def simulate(config: ExperimentConfig):
    """Link simulation: error probability and covertness per n"""
    rows: List[Dict[str, Any]] = []
    try:
        cmd_simulate(config, rows)
    except Exception as e:
        _fail(e, rows, _csv_writer(config, "simulate", SIMULATE_HEADER))


@cli.command()
@experiment_options
def detect(config: ExperimentConfig):
    """Converse detection experiments above and below the weight threshold"""
    rows: List[Dict[str, Any]] = []
    try:
        cmd_detect(config, rows)
    except Exception as e:
        _fail(e, rows, _csv_writer(config, "detect", DETECT_HEADER))


@cli.command()
@experiment_options
def sweep(config: ExperimentConfig):
    """Normalized throughput sweep with SVG chart"""
    rows: List[Dict[str, Any]] = []
    try:
        cmd_sweep(config, rows)
    except Exception as e:
        _fail(e, rows, _csv_writer(config, "sweep", SWEEP_HEADER))


@cli.command("oracle-check")
@experiment_options
@click.option("--bound-scale", type=float, help="Scale the slot bounds (values below 1 must fail)")
def oracle_check(config: ExperimentConfig, bound_scale: Optional[float]):
    """Certify bounds and estimators by exact enumeration"""
    if bound_scale is not None:
        grid = config.oracle.model_copy(update={"bound_scale": bound_scale})
        config = config.model_copy(update={"oracle": grid})
    try:
        report = cmd_oracle_check(config)
    except (CovertSlotError, ValidationError) as e:
        _fail(e)
    if not report["passed"]:
        click.echo("❌ Oracle certification failed", err=True)
        sys.exit(1)
    click.echo("✅ Oracle certification passed")


if __name__ == "__main__":
    cli()
