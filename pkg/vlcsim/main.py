"""Command-line entry point: `vlcsim <trace|optimize|sweep|capacity|symbols> [flags]`.

Exit codes: 0 on success, 1 on bad usage or an invalid config, 2 when the
run itself fails.
"""
import os
import sys
from typing import List, Optional

import attr
import numpy as np
import pandas as pd
from loguru import logger

from vlcsim import config as cli_config
from vlcsim.errors import ConfigError, NonSquareChannelError
from vlcsim.export import (
    Provenance,
    channel_frame,
    spots_frame,
    write_frame,
    write_json,
)
from vlcsim.lensopt import LensParams, optimize
from vlcsim.metrics import (
    condition_number,
    diagonal_dominance,
    spot_stats,
    square_condition_number,
)
from vlcsim.raytrace import estimate_channel
from vlcsim.scene import apply_pose
from vlcsim.sigproc import (
    ProcessingMode,
    build_plan,
    calibrate_noise_variance,
    sic_sinr,
    simulate_symbols,
)
from vlcsim.simconfig import SimConfig, parse_config, serialize_config
from vlcsim.sweeps import (
    Metric,
    capacity_table,
    collapse_offset,
    movable_range,
    parse_offset,
    run_sweep,
)
from vlcsim.utils.logs import setup_logging


def _provenance(cfg: SimConfig, scene=None) -> Provenance:
    scene = scene or cfg.scene
    return Provenance(cfg.trace.seed, cfg.trace.ray_budget, scene.digest())


def _trace(cfg: SimConfig, args, scene=None, progress: bool = True):
    return estimate_channel(
        scene or cfg.scene,
        cfg.trace.ray_budget,
        cfg.trace.seed,
        n_workers=cfg.trace.workers,
        batch_size=cfg.trace.batch_size,
        spot_hits_per_led=cfg.trace.spot_hits_per_led,
        progress=progress and not args.quiet,
    )


def _offset_scene(cfg: SimConfig, token: Optional[str]):
    if not token:
        return cfg.scene
    try:
        target, motion, value = parse_offset(token)
    except ValueError as e:
        raise ConfigError(str(e), "--offset") from None
    return apply_pose(cfg.scene, target, motion.pose(value))


def _modes(cfg: SimConfig, args) -> List[ProcessingMode]:
    if not args.modes:
        return list(cfg.modes)
    try:
        return ProcessingMode.parse(args.modes)
    except ValueError as e:
        raise ConfigError(str(e), "--modes") from None


def _noise_variance(cfg: SimConfig, args, aligned_channel=None) -> float:
    """explicit flag, then the config, then calibration on the aligned channel."""
    if args.noise_variance is not None:
        if not args.noise_variance > 0:
            raise ConfigError(f"must be > 0, got {args.noise_variance}", "--noise_variance")
        return args.noise_variance
    if cfg.noise.variance is not None:
        return cfg.noise.variance

    if aligned_channel is None:
        aligned_channel, _ = _trace(cfg, args)
    calibration = cfg.noise.calibration
    return calibrate_noise_variance(
        aligned_channel,
        calibration.target_capacity,
        mode=calibration.mode,
        channel=calibration.channel,
        accounting=cfg.noise.accounting,
        k=cfg.noise.subset_size,
    )


########## SUBCOMMANDS ##########


def run_trace(cfg: SimConfig, args) -> None:
    scene = _offset_scene(cfg, args.offset)
    channel, spots = _trace(cfg, args, scene)
    provenance = _provenance(cfg, scene)

    try:
        dominance = diagonal_dominance(channel)
    except NonSquareChannelError:
        dominance = None

    kappa = condition_number(channel) if np.any(channel.gains) else float("inf")
    logger.info(f"condition number {kappa:.4f}")

    stats = spot_stats(spots)
    metrics = {
        "condition_number": kappa,
        "square_condition_number": square_condition_number(channel)
        if np.any(channel.gains)
        else None,
        "diagonal_dominance": dominance,
        "loss_ratio": channel.loss_ratio(),
        "cone_mass": channel.cone_mass,
        "collected": channel.collected,
        "stray": channel.stray,
        "lost": channel.lost,
        "spots": {
            j: None if s is None else attr.asdict(s) for j, s in stats.items()
        },
        "config": serialize_config(cfg),
    }

    out = cfg.output_dir
    write_frame(os.path.join(out, "H.csv"), channel_frame(channel), provenance)
    write_frame(os.path.join(out, "spots.csv"), spots_frame(spots), provenance)
    write_json(os.path.join(out, "metrics.json"), metrics, provenance)


def run_optimize(cfg: SimConfig, args) -> None:
    options = cfg.optimizer
    if args.max_evals is not None:
        options = attr.evolve(options, max_evals=args.max_evals)
    if args.restarts is not None:
        options = attr.evolve(options, restarts=args.restarts)
    if args.scan_span is not None:
        options = attr.evolve(options, scan_span=args.scan_span)
    options = attr.evolve(options, n_workers=cfg.trace.workers)

    initial = LensParams.from_scene(cfg.scene)
    result = optimize(cfg.scene, initial, options, progress=not args.quiet)

    provenance = Provenance(options.seed, options.ray_budget, cfg.scene.digest())
    out = cfg.output_dir
    write_json(
        os.path.join(out, "params.json"),
        {
            "initial_params": attr.asdict(initial),
            "best_params": attr.asdict(result.best_params),
            "best_kappa": result.best_kappa,
            "evaluation_count": result.evaluation_count,
            "rounds": result.rounds,
        },
        provenance,
    )
    write_frame(os.path.join(out, "trace.csv"), result.trace_frame(), provenance)


def run_sweeps(cfg: SimConfig, args) -> None:
    entries = [e for e in cfg.sweeps if args.name is None or e.name == args.name]
    if not entries:
        raise ConfigError("no sweep to run", "sweeps")

    noise_variance = None
    if any(e.metric is Metric.CAPACITY_REPORT for e in entries):
        noise_variance = _noise_variance(cfg, args)

    modes = _modes(cfg, args)
    frames, summary = [], {}
    for entry in entries:
        spec = attr.evolve(entry.to_spec(cfg, noise_variance), modes=modes)
        result = run_sweep(cfg.scene, spec, n_workers=cfg.trace.workers, progress=not args.quiet)
        frames.append(result.to_frame())

        try:
            interval = movable_range(result, args.threshold)
        except ValueError:
            interval = None
        summary[spec.label] = {
            "movable_range": None if interval is None else [interval.low, interval.high],
            "collapse_offset": collapse_offset(result, args.drop_ratio),
            "failed_steps": sum(step.failed for step in result.steps),
        }
        logger.info(f"{spec.label}: movable range {summary[spec.label]['movable_range']}")

    provenance = _provenance(cfg)
    out = cfg.output_dir
    write_frame(os.path.join(out, "sweep.csv"), pd.concat(frames, ignore_index=True), provenance)
    write_json(
        os.path.join(out, "sweep_summary.json"),
        {"threshold": args.threshold, "noise_variance": noise_variance, "sweeps": summary},
        provenance,
    )


def run_capacity(cfg: SimConfig, args) -> None:
    offsets = args.offset or ["rotate-rx:0"]
    for token in offsets:
        try:
            parse_offset(token)
        except ValueError as e:
            raise ConfigError(str(e), "--offset") from None

    modes = _modes(cfg, args)
    noise_variance = _noise_variance(cfg, args)
    table = capacity_table(
        cfg.scene,
        offsets,
        modes,
        noise_variance,
        n_rays_per_led=cfg.trace.ray_budget,
        seed=cfg.trace.seed,
        accounting=cfg.noise.accounting,
        k=cfg.noise.subset_size,
        n_workers=cfg.trace.workers,
    )
    write_frame(os.path.join(cfg.output_dir, "capacity.csv"), table, _provenance(cfg))


def run_symbols(cfg: SimConfig, args) -> None:
    scene = _offset_scene(cfg, args.offset)
    mode = _modes(cfg, args)[0] if args.modes else cfg.symbols.mode
    n_symbols = args.n_symbols or cfg.symbols.n_symbols

    noise_variance = _noise_variance(cfg, args)
    channel, _ = _trace(cfg, args, scene)
    plan = build_plan(channel, mode, cfg.noise.subset_size)
    report = simulate_symbols(
        channel,
        plan,
        noise_variance,
        n_symbols,
        cfg.trace.seed,
        force_correct=args.force_correct or cfg.symbols.force_correct,
    )
    model_sinr = sic_sinr(channel, plan, noise_variance, cfg.noise.accounting)

    frame = pd.DataFrame(
        {
            "transmitter": np.arange(channel.n_tx),
            "mode": mode.value,
            "ber": report.ber,
            "realized_sinr": report.realized_sinr,
            "model_sinr": model_sinr,
        }
    )
    write_frame(os.path.join(cfg.output_dir, "ber.csv"), frame, _provenance(cfg, scene))


COMMANDS = {
    "trace": run_trace,
    "optimize": run_optimize,
    "sweep": run_sweeps,
    "capacity": run_capacity,
    "symbols": run_symbols,
}


def run_command(argv: Optional[List[str]] = None) -> int:
    parser = cli_config.build_parser()
    try:
        args = parser.parse_args(argv)
    except cli_config.UsageError as e:
        sys.stderr.write(f"{e}\n")
        return 1

    if args.command is None:
        sys.stderr.write(parser.format_usage())
        return 1

    setup_logging(
        level="WARNING" if args.quiet else args.log_level.upper(),
        log_to_file=not args.no_log_file,
    )

    try:
        cfg = parse_config(args.config).override(
            seed=args.seed, ray_budget=args.rays, output_dir=args.out
        )
        if args.workers is not None:
            if args.workers < 0:
                raise ConfigError(f"must be >= 0, got {args.workers}", "--workers")
            cfg = attr.evolve(cfg, trace=attr.evolve(cfg.trace, workers=args.workers))

        COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        logger.error(f"invalid configuration: {e}")
        return 1
    except Exception as e:
        logger.opt(exception=e).debug("run failed")
        logger.error(f"{args.command} failed: {type(e).__name__}: {e}")
        return 2

    return 0


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
