"""Monte Carlo estimation of the channel gain matrix.

Rays are traced in fixed-size batches. Batch b of LED j draws from its own
stream `SeedSequence([seed, j, b])` and reports integer per-PD counts, so the
merged matrix does not depend on how many workers ran the batches.
"""
from typing import List, Optional, Tuple

import attr
import numpy as np
from loguru import logger

from vlcsim.constants import DEFAULT_SEED, RAYS_PER_BATCH, RAYS_PER_LED
from vlcsim.raytrace.emission import cone_mass, importance_cone, sample_emission_batch
from vlcsim.raytrace.tracer import Fate, trace_batch
from vlcsim.utils.parallel import ordered_map, resolve_workers
from vlcsim.utils.perf import perftimer

# detector-plane hits kept per LED for spot maps
SPOT_HITS_PER_LED = 5000


@attr.s(frozen=True, slots=True, eq=False)
class ChannelMatrix:
    """gains[m, j]: power of LED j collected by PD m; a fraction for unit-power LEDs."""

    gains: np.ndarray = attr.ib()
    n_rays_per_led: int = attr.ib()
    seed: int = attr.ib()
    scene_digest: str = attr.ib(default="")
    stderr: Optional[np.ndarray] = attr.ib(default=None)
    # per-LED power emitted into its importance cone
    cone_mass: Optional[np.ndarray] = attr.ib(default=None)
    # per-LED power that landed on the plane off any PD / was lost in the optics
    stray: Optional[np.ndarray] = attr.ib(default=None)
    lost: Optional[np.ndarray] = attr.ib(default=None)

    @gains.validator
    def _check_gains(self, attribute, value):
        if value.ndim != 2:
            raise ValueError(f"gain matrix must be 2-D, got shape {value.shape}")
        if np.any(value < 0):
            raise ValueError("channel gains must be nonnegative")

    @classmethod
    def from_array(cls, gains, n_rays_per_led: int = 0, seed: int = 0) -> "ChannelMatrix":
        """wrap a known matrix (e.g. published data)."""
        return cls(np.asarray(gains, dtype=float), n_rays_per_led, seed)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.gains.shape

    @property
    def n_rx(self) -> int:
        return self.gains.shape[0]

    @property
    def n_tx(self) -> int:
        return self.gains.shape[1]

    @property
    def collected(self) -> np.ndarray:
        return self.gains.sum(axis=0)

    @property
    def lost_fraction(self) -> np.ndarray:
        """per LED, cone power that reached no PD (stray + optically lost)."""
        if self.stray is None:
            return np.zeros(self.n_tx)
        return self.stray + self.lost

    def loss_ratio(self) -> float:
        """share of all sampled cone power that reached no PD."""
        if self.cone_mass is None or not np.any(self.cone_mass > 0):
            return 0.0
        return float(self.lost_fraction.sum() / self.cone_mass.sum())


@attr.s(frozen=True, slots=True, eq=False)
class SpotMap:
    source_index: np.ndarray = attr.ib()
    xy: np.ndarray = attr.ib()
    weight: np.ndarray = attr.ib()
    on_pd: np.ndarray = attr.ib()
    # (x_min, x_max, y_min, y_max) of the PD array, local frame
    bounds: Tuple[float, float, float, float] = attr.ib()

    @weight.validator
    def _check_weight(self, attribute, value):
        if np.any(value < 0):
            raise ValueError("spot weights must be nonnegative")

    def __len__(self):
        return len(self.source_index)

    def for_source(self, j: int) -> Tuple[np.ndarray, np.ndarray]:
        mask = self.source_index == j
        return self.xy[mask], self.weight[mask]


@attr.s(frozen=True, slots=True, eq=False)
class _BatchResult:
    counts: np.ndarray = attr.ib()
    n_stray: int = attr.ib()
    n_lost: int = attr.ib()
    spots: np.ndarray = attr.ib()
    spots_on_pd: np.ndarray = attr.ib()


def batch_rng(seed: int, led_index: int, batch_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, led_index, batch_index]))


def _run_batch(task) -> _BatchResult:
    scene, cone, led_index, batch_index, n, seed, keep = task

    rng = batch_rng(seed, led_index, batch_index)
    origins, directions = sample_emission_batch(
        led_index, scene.leds, rng, cone, n, scene.led_pose
    )
    result = trace_batch(scene, origins, directions)

    collected = result.pd_index[result.fate == Fate.COLLECTED]
    counts = np.bincount(collected, minlength=scene.n_rx).astype(np.int64)

    return _BatchResult(
        counts=counts,
        n_stray=int(np.count_nonzero(result.fate == Fate.STRAY)),
        n_lost=int(np.count_nonzero(result.fate == Fate.LOST)),
        spots=result.xy[result.on_plane][:keep],
        spots_on_pd=(result.pd_index[result.on_plane] >= 0)[:keep],
    )


def _batch_sizes(n_rays: int, batch_size: int) -> List[int]:
    full, rest = divmod(n_rays, batch_size)
    return [batch_size] * full + ([rest] if rest else [])


def _stderr(batch_counts: np.ndarray, sizes: np.ndarray, mass: float) -> np.ndarray:
    """standard error of each gain from the spread of per-batch estimates."""
    n_total = sizes.sum()
    p = batch_counts.sum(axis=0) / n_total

    if len(sizes) < 2:
        return mass * np.sqrt(p * (1.0 - p) / n_total)

    per_batch = batch_counts / sizes[:, None]
    var = np.sum(sizes[:, None] * (per_batch - p) ** 2, axis=0) / (len(sizes) - 1)
    return mass * np.sqrt(var / n_total)


@perftimer
def estimate_channel(
    scene,
    n_rays_per_led: int = RAYS_PER_LED,
    seed: int = DEFAULT_SEED,
    n_workers: Optional[int] = None,
    batch_size: int = RAYS_PER_BATCH,
    spot_hits_per_led: int = SPOT_HITS_PER_LED,
    progress: bool = False,
) -> Tuple[ChannelMatrix, SpotMap]:
    """trace `n_rays_per_led` rays from every LED and tally them per PD."""
    if n_rays_per_led < 1:
        raise ValueError(f"n_rays_per_led must be >= 1, got {n_rays_per_led}")

    n_workers = resolve_workers(n_workers)
    sizes = _batch_sizes(n_rays_per_led, batch_size)
    normal = scene.led_normal()
    power = scene.leds.total_power_per_led

    masses, tasks = [], []
    for j in range(scene.n_tx):
        cone = importance_cone(scene, j)
        mass = cone_mass(cone, normal, scene.leds.lambertian_exponent)
        masses.append(mass * power)

        if mass <= 0.0:
            logger.debug(f"LED {j}: importance cone carries no power, skipping")
            continue

        kept = 0
        for b, n in enumerate(sizes):
            keep = max(0, min(n, spot_hits_per_led - kept))
            kept += keep
            tasks.append((scene, cone, j, b, n, seed, keep))

    logger.info(
        f"tracing {scene.n_tx} LEDs x {n_rays_per_led} rays "
        f"({len(tasks)} batches, {n_workers} workers)"
    )
    results = ordered_map(
        _run_batch, tasks, n_workers=n_workers, desc="batches", progress=progress
    )

    gains = np.zeros((scene.n_rx, scene.n_tx))
    stderr = np.zeros_like(gains)
    stray = np.zeros(scene.n_tx)
    lost = np.zeros(scene.n_tx)
    spot_src, spot_xy, spot_on_pd = [], [], []

    by_led = {}
    for task, result in zip(tasks, results):
        by_led.setdefault(task[2], []).append(result)

    for j, batches in sorted(by_led.items()):
        mass = masses[j]
        weight = mass / n_rays_per_led

        batch_counts = np.stack([r.counts for r in batches])
        gains[:, j] = batch_counts.sum(axis=0) * weight
        stderr[:, j] = _stderr(batch_counts, np.array(sizes, dtype=float), mass)
        stray[j] = sum(r.n_stray for r in batches) * weight
        lost[j] = sum(r.n_lost for r in batches) * weight

        for r in batches:
            spot_src.append(np.full(len(r.spots), j, dtype=np.int64))
            spot_xy.append(r.spots)
            spot_on_pd.append(r.spots_on_pd)

    source_index = np.concatenate(spot_src) if spot_src else np.zeros(0, dtype=np.int64)
    half = scene.pds.span / 2.0
    spots = SpotMap(
        source_index=source_index,
        xy=np.concatenate(spot_xy) if spot_xy else np.zeros((0, 2)),
        weight=np.asarray(masses)[source_index] / n_rays_per_led,
        on_pd=np.concatenate(spot_on_pd) if spot_on_pd else np.zeros(0, dtype=bool),
        bounds=(-half, half, -half, half),
    )

    channel = ChannelMatrix(
        gains=gains,
        n_rays_per_led=n_rays_per_led,
        seed=seed,
        scene_digest=scene.digest(),
        stderr=stderr,
        cone_mass=np.array(masses),
        stray=stray,
        lost=lost,
    )
    return channel, spots
