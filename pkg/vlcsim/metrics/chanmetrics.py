"""Figures of merit for an estimated channel."""
from typing import Dict, Optional, Sequence, Tuple, Union

import attr
import numpy as np

from vlcsim.errors import NonSquareChannelError
from vlcsim.raytrace.estimate import ChannelMatrix, SpotMap

# smallest singular value treated as nonzero
RANK_FLOOR = 1e-300

MatrixLike = Union[ChannelMatrix, np.ndarray]


def as_gains(H: MatrixLike) -> np.ndarray:
    return H.gains if isinstance(H, ChannelMatrix) else np.asarray(H, dtype=float)


def singular_values(H: MatrixLike) -> np.ndarray:
    """thin singular spectrum, descending."""
    return np.linalg.svd(as_gains(H), compute_uv=False)


def condition_number(H: MatrixLike) -> float:
    """2-norm condition number sigma_max / sigma_min; inf when rank-deficient."""
    gains = as_gains(H)
    if not np.any(gains):
        raise ValueError("condition number of an all-zero channel is undefined")

    s = singular_values(gains)
    if s[-1] < RANK_FLOOR:
        return float("inf")

    return float(s[0] / s[-1])


def best_matched_pds(H: MatrixLike) -> np.ndarray:
    """the strongest PD of every LED column (lower index on ties)."""
    return np.argmax(as_gains(H), axis=0)


def square_condition_number(
    H: MatrixLike, pd_indices: Optional[Sequence[int]] = None
) -> float:
    """condition number of the Nt x Nt block of the PDs matched to each LED."""
    gains = as_gains(H)
    rows = best_matched_pds(gains) if pd_indices is None else np.asarray(pd_indices)

    if len(rows) != gains.shape[1]:
        raise ValueError(f"need one PD per LED, got {len(rows)} for {gains.shape[1]}")

    return condition_number(gains[rows, :])


def diagonal_dominance(H: MatrixLike) -> float:
    """min over rows of diagonal / largest off-diagonal entry."""
    gains = as_gains(H)
    n_rx, n_tx = gains.shape
    if n_rx != n_tx:
        raise NonSquareChannelError(
            f"{n_rx}x{n_tx} channel has no diagonal; map receivers to transmitters "
            f"with sigproc.select_receivers first"
        )

    diag = np.diag(gains)
    off = gains.copy()
    np.fill_diagonal(off, 0.0)
    worst = off.max(axis=1)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(worst > 0, diag / worst, np.inf)

    return float(ratio.min())


@attr.s(frozen=True, slots=True)
class SpotStats:
    centroid: Tuple[float, float] = attr.ib()
    rms_diameter: float = attr.ib()
    # share of the spot's detector-plane power that falls on a PD
    power_fraction: float = attr.ib()
    n_hits: int = attr.ib(default=0)


def spot_stats(
    spots: SpotMap, sources: Optional[Sequence[int]] = None
) -> Dict[int, Optional[SpotStats]]:
    """weighted centroid and RMS diameter per source; None for sources with no hits."""
    if sources is None:
        sources = np.unique(spots.source_index).tolist()

    stats = {}
    for j in sources:
        mask = spots.source_index == j
        w = spots.weight[mask]
        total = w.sum()
        if not mask.any() or total <= 0:
            stats[j] = None
            continue

        xy = spots.xy[mask]
        centroid = (w @ xy) / total
        r2 = np.sum((xy - centroid) ** 2, axis=1)
        rms = 2.0 * np.sqrt((w @ r2) / total)
        on_pd = (w @ spots.on_pd[mask]) / total if len(spots.on_pd) else 0.0

        stats[j] = SpotStats(
            centroid=(float(centroid[0]), float(centroid[1])),
            rms_diameter=float(rms),
            power_fraction=float(np.clip(on_pd, 0.0, 1.0)),
            n_hits=int(mask.sum()),
        )

    return stats
