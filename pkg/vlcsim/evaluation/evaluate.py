"""Reproduction runner: compares simulated results with the published reference data.

    python -m vlcsim.evaluation.evaluate --stages published,aligned --rays 50000
"""
import argparse
import json
import os
from datetime import date
from typing import Any, Dict

import numpy as np
from loguru import logger

from vlcsim.constants import (
    DEFAULT_CONFIG,
    PUBLISHED_DATA,
    PUBLISHED_NO_PROCESSING_CAPACITY,
    PUBLISHED_SIC_TAIL_CAPACITY,
)
from vlcsim.export import Provenance, write_json
from vlcsim.metrics import condition_number, diagonal_dominance, spot_stats
from vlcsim.raytrace import ChannelMatrix, estimate_channel
from vlcsim.sigproc import Accounting, ProcessingMode, calibrate_noise_variance, evaluate
from vlcsim.simconfig import parse_config
from vlcsim.sweeps import capacity_table, collapse_offset, movable_range, run_sweep
from vlcsim.utils.logs import setup_logging
from vlcsim.utils.perf import stopwatch

STAGES = ("published", "aligned", "sweeps", "capacity")


def load_published(path: str = PUBLISHED_DATA) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def published_channel(published: Dict[str, Any] = None) -> ChannelMatrix:
    """the published 16x16 matrix in absolute units (rows PDs, columns LEDs)."""
    published = published or load_published()
    block = published["channel_matrix"]
    return ChannelMatrix.from_array(np.asarray(block["gains"]) * block["scale"])


def diagonal_fit(simulated: np.ndarray, reference: np.ndarray) -> Dict[str, float]:
    """least-squares global scale of the simulated diagonal onto the reference one,
    and the RMS relative error left after scaling."""
    sim, ref = np.diag(simulated), np.diag(reference)
    scale = float(sim @ ref / (sim @ sim)) if np.any(sim) else float("nan")
    rel = (scale * sim - ref) / ref
    return {"scale": scale, "rms_relative_error": float(np.sqrt(np.mean(rel**2)))}


def check_published(published) -> Dict[str, Any]:
    H = published_channel(published)
    summary = {
        "condition_number": condition_number(H),
        "published_condition_number": published["condition_number"],
        "diagonal_dominance": diagonal_dominance(H),
    }

    # uncancelled capacity target under the plain interference sum
    var = calibrate_noise_variance(H, PUBLISHED_NO_PROCESSING_CAPACITY)
    summary["standard"] = {
        "noise_variance": var,
        "capacity": {
            m.value: evaluate(H, var, m).capacity.tolist() for m in ProcessingMode
        },
    }

    # cancelled-tail target with self-inclusive interference
    var = calibrate_noise_variance(
        H,
        PUBLISHED_SIC_TAIL_CAPACITY,
        mode=ProcessingMode.COMBINE_AND_SIC,
        channel="last",
        accounting=Accounting.SELF_INCLUSIVE,
    )
    summary["self_inclusive"] = {
        "noise_variance": var,
        "capacity": {
            m.value: evaluate(H, var, m, accounting=Accounting.SELF_INCLUSIVE).capacity.tolist()
            for m in ProcessingMode
        },
    }
    logger.info(f"published matrix: kappa {summary['condition_number']:.4f}")
    return summary


def check_aligned(cfg, published) -> Dict[str, Any]:
    channel, spots = estimate_channel(
        cfg.scene, cfg.trace.ray_budget, cfg.trace.seed, n_workers=cfg.trace.workers
    )
    stats = [s for s in spot_stats(spots).values() if s is not None]
    reference = published_channel(published).gains

    summary = {
        "condition_number": condition_number(channel),
        "diagonal_dominance": diagonal_dominance(channel),
        "loss_ratio": channel.loss_ratio(),
        "mean_rms_spot_diameter": float(np.mean([s.rms_diameter for s in stats]))
        if stats
        else None,
        "diagonal_fit": diagonal_fit(channel.gains, reference),
    }
    logger.info(f"aligned trace: kappa {summary['condition_number']:.4f}")
    return summary


def check_sweeps(cfg, published) -> Dict[str, Any]:
    summary = {}
    for entry in cfg.sweeps:
        spec = entry.to_spec(cfg)
        result = run_sweep(cfg.scene, spec, n_workers=cfg.trace.workers)
        try:
            interval = movable_range(result)
        except ValueError:
            interval = None
        summary[spec.label] = {
            "movable_range": None if interval is None else [interval.low, interval.high],
            "collapse_offset": collapse_offset(result),
        }
    summary["published"] = published["movable_range"]
    return summary


def check_capacity(cfg, published) -> Dict[str, Any]:
    aligned, _ = estimate_channel(
        cfg.scene, cfg.trace.ray_budget, cfg.trace.seed, n_workers=cfg.trace.workers
    )
    calibration = cfg.noise.calibration
    var = calibrate_noise_variance(
        aligned,
        calibration.target_capacity,
        mode=calibration.mode,
        channel=calibration.channel,
        accounting=cfg.noise.accounting,
        k=cfg.noise.subset_size,
    )

    offsets = [
        f"{motion}:{value}"
        for motion, by_value in published["capacity"].items()
        for value in by_value
    ]
    table = capacity_table(
        cfg.scene,
        offsets,
        list(ProcessingMode),
        var,
        n_rays_per_led=cfg.trace.ray_budget,
        seed=cfg.trace.seed,
        accounting=cfg.noise.accounting,
        k=cfg.noise.subset_size,
        n_workers=cfg.trace.workers,
    )

    rows = {}
    channels = [c for c in table.columns if c.startswith("ch")]
    for _, row in table.iterrows():
        motion, value = row["offset"].split(":")
        reference = published["capacity"][motion][value][row["mode"]]
        simulated = row[channels].to_numpy(dtype=float)
        rows[f"{row['offset']}/{row['mode']}"] = {
            "simulated": simulated.tolist(),
            "published": reference,
            "mean_abs_diff": float(np.mean(np.abs(simulated - np.asarray(reference)))),
        }

    return {"noise_variance": var, "tables": rows}


CHECKS = {
    "published": lambda cfg, published: check_published(published),
    "aligned": check_aligned,
    "sweeps": check_sweeps,
    "capacity": check_capacity,
}


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", type=str, default=DEFAULT_CONFIG)
    parser.add_argument(
        "--stages", type=str, default="published,aligned", help=f"comma-separated; any of {STAGES}"
    )
    parser.add_argument("--rays", type=int, default=None, help="rays per LED")
    parser.add_argument("--out", type=str, default=f"./results/{date.today()}")
    args = parser.parse_args()

    setup_logging()
    cfg = parse_config(args.config).override(ray_budget=args.rays, output_dir=args.out)
    published = load_published()

    summary = {}
    for stage in [s.strip() for s in args.stages.split(",") if s.strip()]:
        if stage not in CHECKS:
            parser.error(f"unknown stage {stage!r}; choose from {STAGES}")
        logger.info(f"EVALUATING [{stage}]")
        with stopwatch(stage) as timing:
            summary[stage] = CHECKS[stage](cfg, published)
        summary[stage]["runtime_seconds"] = timing["seconds"]

    provenance = Provenance(cfg.trace.seed, cfg.trace.ray_budget, cfg.scene.digest())
    write_json(os.path.join(args.out, "summary.json"), summary, provenance)
