"""Per-channel capacity tables at fixed misalignments."""
import re
from typing import Iterable, List, Optional, Sequence, Tuple

import pandas as pd
from loguru import logger

from vlcsim.constants import DEFAULT_SEED, RAYS_PER_LED, SUBSET_SIZE
from vlcsim.raytrace.estimate import estimate_channel
from vlcsim.scene.scene import Target, apply_pose
from vlcsim.sigproc.plan import Accounting, ProcessingMode
from vlcsim.sigproc.sic import evaluate
from vlcsim.sweeps.sweep import Motion

_OFFSET_RE = re.compile(
    r"^(?P<kind>rotate|translate|move)(?:-(?P<axis>[xyz]))?-(?P<target>rx|tx)"
    r":(?P<value>[-+0-9.eE]+)$"
)


def parse_offset(token: str) -> Tuple[Target, Motion, float]:
    """`rotate-rx:0.5`, `translate-y-tx:100`, `move-z-rx:-1000`; axis defaults to x."""
    match = _OFFSET_RE.match(token.strip())
    if match is None:
        raise ValueError(
            f"bad offset {token!r}; expected <rotate|translate>[-x|-y|-z]-<rx|tx>:<value>"
        )

    kind = "translate" if match["kind"] == "move" else match["kind"]
    motion = Motion(f"{kind}-{match['axis'] or 'x'}")
    try:
        value = float(match["value"])
    except ValueError:
        raise ValueError(f"bad offset value in {token!r}") from None

    return Target(match["target"]), motion, value


def capacity_table(
    scene,
    offsets: Iterable[str],
    modes: Sequence[ProcessingMode],
    noise_variance: float,
    n_rays_per_led: int = RAYS_PER_LED,
    seed: int = DEFAULT_SEED,
    accounting: Accounting = Accounting.STANDARD,
    k: int = SUBSET_SIZE,
    n_workers: Optional[int] = None,
) -> pd.DataFrame:
    """rows of (offset, mode, ch1..chN) with capacities in transmitter index order.

    Offsets are traced one after the other; each trace is itself parallel over
    ray batches. The same noise variance is used for every offset.
    """
    parsed = [(token, parse_offset(token)) for token in offsets]
    modes = [ProcessingMode(m) for m in modes]

    rows: List[dict] = []
    for token, (target, motion, value) in parsed:
        moved = apply_pose(scene, target, motion.pose(value))
        channel, _ = estimate_channel(moved, n_rays_per_led, seed, n_workers=n_workers)
        for mode in modes:
            report = evaluate(channel, noise_variance, mode, k, accounting)
            row = {"offset": token, "mode": mode.value}
            row.update({f"ch{j + 1}": c for j, c in enumerate(report.capacity)})
            rows.append(row)
        logger.info(f"capacity table: {token} done")

    return pd.DataFrame(rows)
