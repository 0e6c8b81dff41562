"""Power-ordered successive interference cancellation and capacity.

Every transmitter sends unit-power symbols. For the transmitter decoded at
position p with weights w the SINR is

    (w . h_j)^2 / (sum_i (w . h_i)^2 + sigma^2 |w|^2)

where i runs over transmitters decoded after p when the mode cancels, and
over every other transmitter when it does not.
"""
from typing import List, Sequence

import numpy as np
from loguru import logger
from scipy.optimize import brentq

from vlcsim.constants import SUBSET_SIZE
from vlcsim.errors import CalibrationError, EmptySubsetError
from vlcsim.metrics.chanmetrics import MatrixLike, as_gains
from vlcsim.sigproc.combining import mrc_weights, select_receivers, single_pd_weights
from vlcsim.sigproc.plan import (
    Accounting,
    CapacityReport,
    ProcessingMode,
    ProcessingPlan,
    WeightVector,
)


def combined_power(H: MatrixLike, wv: WeightVector) -> float:
    """output power of the combiner normalized to unit-norm weights."""
    if wv.norm_sq == 0.0:
        return 0.0
    gains = as_gains(H)
    return wv.combine(gains[:, wv.target]) ** 2 / wv.norm_sq


def decode_order(H: MatrixLike, weights: Sequence[WeightVector]) -> List[int]:
    """transmitters by descending combined power, lower index first on ties."""
    powers = np.array([combined_power(H, wv) for wv in weights])
    # stable sort keeps index order among equal powers
    return [int(j) for j in np.argsort(-powers, kind="stable")]


def build_plan(H: MatrixLike, mode: ProcessingMode, k: int = SUBSET_SIZE) -> ProcessingPlan:
    """weights and decode order for `mode`.

    A transmitter that reaches no receiver gets all-zero weights and ends up
    with zero SINR instead of failing the whole plan.
    """
    mode = ProcessingMode(mode)
    gains = as_gains(H)
    k = min(k, gains.shape[0])

    weights, subsets = [], []
    for j in range(gains.shape[1]):
        try:
            if mode.combines:
                wv = mrc_weights(gains, j, select_receivers(gains, j, k))
            else:
                wv = single_pd_weights(gains, j)
        except EmptySubsetError:
            logger.debug(f"transmitter {j} is unreachable")
            wv = WeightVector(w=np.zeros(gains.shape[0]), target=j, subset=())
        weights.append(wv)
        subsets.append(wv.subset)

    return ProcessingPlan(
        decode_order=decode_order(gains, weights),
        receiver_subsets=subsets,
        weights=weights,
        mode=mode,
    )


def sic_sinr(
    H: MatrixLike,
    plan: ProcessingPlan,
    noise_variance: float,
    accounting: Accounting = Accounting.STANDARD,
) -> np.ndarray:
    """per-transmitter SINR under ideal cancellation (indexed by transmitter)."""
    if not noise_variance > 0:
        raise ValueError(f"noise variance must be > 0, got {noise_variance}")

    gains = as_gains(H)
    W = plan.weight_matrix()
    # G[j, i] = w_j . h_i
    G = W @ gains
    signal = np.diag(G) ** 2
    noise = noise_variance * np.sum(W * W, axis=1)

    sinr = np.empty(plan.n_tx)
    for p, j in enumerate(plan.decode_order):
        if plan.mode.cancels:
            interferers = list(plan.decode_order[p + 1:])
        else:
            interferers = [i for i in range(plan.n_tx) if i != j]

        interference = float(np.sum(G[j, interferers] ** 2))
        if not plan.mode.cancels and Accounting(accounting) is Accounting.SELF_INCLUSIVE:
            interference += signal[j]

        denominator = interference + noise[j]
        sinr[j] = signal[j] / denominator if denominator > 0 else 0.0

    return sinr


def capacity(sinr) -> np.ndarray:
    """Shannon capacity in bits/s/Hz."""
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ValueError("SINR must be nonnegative")
    return np.log2(1.0 + sinr)


def evaluate(
    H: MatrixLike,
    noise_variance: float,
    mode: ProcessingMode,
    k: int = SUBSET_SIZE,
    accounting: Accounting = Accounting.STANDARD,
) -> CapacityReport:
    plan = build_plan(H, mode, k)
    sinr = sic_sinr(H, plan, noise_variance, accounting)

    return CapacityReport(
        sinr=sinr,
        capacity=capacity(sinr),
        noise_variance=noise_variance,
        mode=plan.mode,
        decode_order=plan.decode_order,
        accounting=accounting,
    )


def _statistic(report: CapacityReport, channel: str) -> float:
    if channel == "mean":
        return float(np.mean(report.capacity))
    if channel == "last":
        return report.last_decoded_capacity
    raise ValueError(f"unknown calibration channel {channel!r}; use 'mean' or 'last'")


def calibrate_noise_variance(
    H: MatrixLike,
    target_capacity: float,
    mode: ProcessingMode = ProcessingMode.NO_PROCESSING,
    channel: str = "mean",
    accounting: Accounting = Accounting.STANDARD,
    k: int = SUBSET_SIZE,
) -> float:
    """noise variance at which `channel` capacity of `mode` equals the target.

    The search runs over log10(sigma^2) across 40 decades around the
    channel's own power scale.
    """
    if channel not in ("mean", "last"):
        raise ValueError(f"unknown calibration channel {channel!r}; use 'mean' or 'last'")

    gains = as_gains(H)
    scale = 2.0 * np.log10(np.max(gains))

    def gap(log_var):
        report = evaluate(gains, 10.0**log_var, mode, k, accounting)
        return _statistic(report, channel) - target_capacity

    lo, hi = scale - 20.0, scale + 20.0
    try:
        log_var = brentq(gap, lo, hi, xtol=1e-12, rtol=1e-14, maxiter=500)
    except ValueError as e:
        raise CalibrationError(
            f"no noise variance gives {channel} capacity {target_capacity} "
            f"for {ProcessingMode(mode).value} ({Accounting(accounting).value})"
        ) from e

    noise_variance = 10.0**log_var
    logger.info(
        f"calibrated noise variance {noise_variance:.6g} "
        f"({ProcessingMode(mode).value}, {channel} capacity -> {target_capacity})"
    )
    return noise_variance
