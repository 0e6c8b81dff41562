"""Single-axis misalignment sweeps.

Each offset is applied to the aligned scene from scratch, traced, and reduced
to channel metrics (and optionally capacity reports). Steps are independent,
so they run in a pebble process pool; a failing step is recorded and the
sweep goes on.
"""
import enum
from typing import Dict, List, Optional, Sequence, Tuple

import attr
import numpy as np
import pandas as pd
from loguru import logger
from pebble import ProcessPool
from tqdm import tqdm

from vlcsim.constants import DEFAULT_SEED, GOOD_KAPPA, RAYS_PER_LED, SUBSET_SIZE
from vlcsim.errors import NonSquareChannelError
from vlcsim.metrics.chanmetrics import (
    condition_number,
    diagonal_dominance,
    square_condition_number,
)
from vlcsim.raytrace.estimate import estimate_channel
from vlcsim.scene.pose import Pose
from vlcsim.scene.scene import Target, apply_pose
from vlcsim.sigproc.plan import Accounting, CapacityReport, ProcessingMode
from vlcsim.sigproc.sic import evaluate
from vlcsim.utils.parallel import resolve_workers
from vlcsim.utils.perf import perftimer

_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


class Motion(enum.Enum):
    TRANSLATE_X = "translate-x"
    TRANSLATE_Y = "translate-y"
    TRANSLATE_Z = "translate-z"
    ROTATE_X = "rotate-x"
    ROTATE_Y = "rotate-y"
    ROTATE_Z = "rotate-z"

    @property
    def kind(self) -> str:
        return self.value.split("-")[0]

    @property
    def axis(self) -> Tuple[float, float, float]:
        return _AXES[self.value.split("-")[1]]

    def pose(self, offset: float, pivot_offset=(0.0, 0.0, 0.0)) -> Pose:
        """mm for translations, degrees for rotations."""
        if self.kind == "translate":
            return Pose(translation=np.asarray(self.axis) * offset)
        return Pose.rotate(self.axis, offset, pivot_offset)


class Metric(enum.Enum):
    CONDITION_NUMBER = "condition_number"
    CAPACITY_REPORT = "capacity_report"


def _positive(instance, attribute, value):
    if not value > 0:
        raise ValueError(f"{attribute.name} must be > 0, got {value}")


@attr.s(frozen=True, slots=True)
class SweepSpec:
    target: Target = attr.ib(converter=Target)
    motion: Motion = attr.ib(converter=Motion)
    start: float = attr.ib(converter=float)
    stop: float = attr.ib(converter=float)
    step: float = attr.ib(converter=float, validator=_positive)
    metric: Metric = attr.ib(default=Metric.CONDITION_NUMBER, converter=Metric)
    n_rays_per_led: int = attr.ib(default=RAYS_PER_LED, converter=int)
    seed: int = attr.ib(default=DEFAULT_SEED, converter=int)
    noise_variance: Optional[float] = attr.ib(default=None)
    modes: Tuple[ProcessingMode, ...] = attr.ib(
        default=tuple(ProcessingMode),
        converter=lambda ms: tuple(ProcessingMode(m) for m in ms),
    )
    accounting: Accounting = attr.ib(default=Accounting.STANDARD, converter=Accounting)
    subset_size: int = attr.ib(default=SUBSET_SIZE, converter=int)
    pivot_offset: Tuple[float, float, float] = attr.ib(
        default=(0.0, 0.0, 0.0), converter=lambda v: tuple(float(x) for x in v)
    )
    name: str = attr.ib(default="")

    @stop.validator
    def _check_range(self, attribute, value):
        if self.start > value:
            raise ValueError(f"sweep start {self.start} exceeds stop {value}")

    @noise_variance.validator
    def _check_noise(self, attribute, value):
        if self.metric is Metric.CAPACITY_REPORT and (value is None or not value > 0):
            raise ValueError("capacity sweeps need a positive noise variance")

    @property
    def label(self) -> str:
        return self.name or f"{self.motion.value}-{self.target.value}"

    def offsets(self) -> np.ndarray:
        n = int(np.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return self.start + self.step * np.arange(n)


@attr.s(frozen=True, slots=True, eq=False)
class SweepStep:
    offset: float = attr.ib()
    kappa: float = attr.ib(default=float("nan"))
    square_kappa: float = attr.ib(default=float("nan"))
    dominance: float = attr.ib(default=float("nan"))
    loss_fraction: float = attr.ib(default=float("nan"))
    # total collected power over all LEDs
    collected: float = attr.ib(default=float("nan"))
    reports: Dict[ProcessingMode, CapacityReport] = attr.ib(factory=dict)
    error: Optional[str] = attr.ib(default=None)

    @property
    def failed(self) -> bool:
        return self.error is not None


@attr.s(frozen=True, slots=True, eq=False)
class SweepResult:
    spec: SweepSpec = attr.ib()
    steps: Tuple[SweepStep, ...] = attr.ib(converter=tuple)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([s.offset for s in self.steps])

    @property
    def kappas(self) -> np.ndarray:
        return np.array([s.kappa for s in self.steps])

    def to_frame(self) -> pd.DataFrame:
        """one row per offset, or per offset and mode for capacity sweeps."""
        rows = []
        for step in self.steps:
            base = {
                "sweep": self.spec.label,
                "offset": step.offset,
                "kappa": step.kappa,
                "square_kappa": step.square_kappa,
                "diagonal_dominance": step.dominance,
                "loss_fraction": step.loss_fraction,
                "error": step.error or "",
            }
            if not step.reports:
                rows.append(base)
                continue
            for mode, report in step.reports.items():
                row = dict(base, mode=mode.value)
                row.update({f"ch{j + 1}": c for j, c in enumerate(report.capacity)})
                rows.append(row)

        return pd.DataFrame(rows)


def evaluate_offset(scene, spec: SweepSpec, offset: float) -> SweepStep:
    """trace one misaligned scene and reduce it to metrics."""
    moved = apply_pose(scene, spec.target, spec.motion.pose(offset, spec.pivot_offset))
    channel, _ = estimate_channel(moved, spec.n_rays_per_led, spec.seed, n_workers=1)

    collected = float(channel.gains.sum())
    if collected == 0.0:
        logger.debug(f"offset {offset}: no PD receives light")
        return SweepStep(offset=offset, loss_fraction=1.0, collected=0.0)

    try:
        dominance = diagonal_dominance(channel)
    except NonSquareChannelError:
        dominance = float("nan")

    reports = {}
    if spec.metric is Metric.CAPACITY_REPORT:
        for mode in spec.modes:
            reports[mode] = evaluate(
                channel, spec.noise_variance, mode, spec.subset_size, spec.accounting
            )

    return SweepStep(
        offset=offset,
        kappa=condition_number(channel),
        square_kappa=square_condition_number(channel),
        dominance=dominance,
        loss_fraction=channel.loss_ratio(),
        collected=collected,
        reports=reports,
    )


def _failed(offset: float, e: BaseException) -> SweepStep:
    logger.warning(f"sweep step at offset {offset} failed: {e}")
    return SweepStep(offset=offset, error=f"{type(e).__name__}: {e}")


@perftimer
def run_sweep(
    scene, spec: SweepSpec, n_workers: Optional[int] = None, progress: bool = False
) -> SweepResult:
    offsets = spec.offsets()
    n_workers = min(resolve_workers(n_workers), len(offsets))
    logger.info(f"sweep {spec.label}: {len(offsets)} offsets on {n_workers} workers")

    steps: List[SweepStep] = []
    pbar = tqdm(total=len(offsets), desc=spec.label, disable=not progress)

    if n_workers <= 1:
        for offset in offsets:
            try:
                steps.append(evaluate_offset(scene, spec, float(offset)))
            except Exception as e:
                steps.append(_failed(float(offset), e))
            pbar.update(1)
    else:
        with ProcessPool(max_workers=n_workers) as pool:
            futures = [
                pool.schedule(evaluate_offset, args=(scene, spec, float(offset)))
                for offset in offsets
            ]
            # futures are collected in offset order
            for offset, future in zip(offsets, futures):
                try:
                    steps.append(future.result())
                except Exception as e:
                    steps.append(_failed(float(offset), e))
                pbar.update(1)

    pbar.close()
    return SweepResult(spec=spec, steps=sorted(steps, key=lambda s: s.offset))


@attr.s(frozen=True, slots=True)
class Interval:
    low: float = attr.ib()
    high: float = attr.ib()

    @property
    def width(self) -> float:
        return self.high - self.low


def _crossing(x0, k0, x1, k1, threshold) -> float:
    """where kappa crosses `threshold` between two steps, linear in kappa."""
    if not np.isfinite(k1) or k1 == k0:
        return x0
    return x0 + (threshold - k0) / (k1 - k0) * (x1 - x0)


def movable_range(
    result: SweepResult, threshold: float = GOOD_KAPPA
) -> Optional[Interval]:
    """largest contiguous offset interval around alignment with kappa <= threshold.

    Returns None when the aligned point itself exceeds the threshold.
    """
    offsets = result.offsets
    kappas = np.where(np.isnan(result.kappas), np.inf, result.kappas)

    aligned = np.flatnonzero(np.isclose(offsets, 0.0, atol=1e-12))
    if len(aligned) == 0:
        raise ValueError("sweep does not include the aligned offset 0")
    i0 = int(aligned[0])
    if kappas[i0] > threshold:
        return None

    high = offsets[-1]
    for i in range(i0 + 1, len(offsets)):
        if kappas[i] > threshold:
            high = _crossing(offsets[i - 1], kappas[i - 1], offsets[i], kappas[i], threshold)
            break

    low = offsets[0]
    for i in range(i0 - 1, -1, -1):
        if kappas[i] > threshold:
            low = _crossing(offsets[i + 1], kappas[i + 1], offsets[i], kappas[i], threshold)
            break

    return Interval(low=float(low), high=float(high))


def _collapsed(step: SweepStep, peak: float, drop_ratio: float) -> bool:
    if step.collected == 0.0 or not np.isfinite(step.kappa):
        # some PD or LED has dropped out of the link
        return True
    return peak > 0 and step.kappa < drop_ratio * peak


def collapse_offset(result: SweepResult, drop_ratio: float = 0.5) -> Optional[float]:
    """offset nearest alignment where the link collapses, or None.

    Each side is scanned outward from the step closest to offset 0 against
    its own running peak of kappa. A step collapses when kappa falls below
    drop_ratio x that peak, or when kappa is no longer finite because PDs
    stopped receiving light.
    """
    steps = [s for s in result.steps if not s.failed]
    if not steps:
        return None

    offsets = np.array([s.offset for s in steps])
    i0 = int(np.argmin(np.abs(offsets)))

    found = []
    for side in (steps[i0:], steps[i0::-1]):
        peak = -np.inf
        for step in side:
            if _collapsed(step, peak, drop_ratio):
                found.append(step.offset)
                break
            peak = max(peak, step.kappa)

    if not found:
        return None
    return float(min(found, key=abs))
