"""Result files: CSV tables and JSON documents with a provenance header.

Every CSV opens with `#` comment lines (seed, ray budget, scene digest).
Floats are written in their shortest round-trip form so that identical runs
produce identical bytes.
"""
import json
import os
from typing import Any, Dict, Optional

import attr
import numpy as np
import pandas as pd
from loguru import logger

from vlcsim.utils.paths import ensure_dir


@attr.s(frozen=True, slots=True)
class Provenance:
    seed: int = attr.ib()
    ray_budget: int = attr.ib()
    scene_digest: str = attr.ib()

    def header_lines(self):
        return [
            f"# seed: {self.seed}",
            f"# ray_budget: {self.ray_budget}",
            f"# scene_digest: {self.scene_digest}",
        ]

    def to_dict(self) -> Dict[str, Any]:
        return attr.asdict(self)


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return str(value)


def write_frame(path: str, frame: pd.DataFrame, provenance: Provenance) -> str:
    """CSV of `frame` below the provenance header."""
    ensure_dir(os.path.dirname(path) or ".")
    formatted = pd.DataFrame(
        {col: frame[col].map(format_value) for col in frame.columns}, columns=frame.columns
    )

    with open(path, "w", encoding="utf-8", newline="") as f:
        for line in provenance.header_lines():
            f.write(line + "\n")
        formatted.to_csv(f, index=False, lineterminator="\n")

    logger.info(f"wrote {path} ({len(frame)} rows)")
    return path


def channel_frame(channel) -> pd.DataFrame:
    """one row per LED, one column per PD."""
    gains = channel.gains.T
    frame = pd.DataFrame(gains, columns=[f"pd{m}" for m in range(gains.shape[1])])
    frame.insert(0, "led", np.arange(gains.shape[0]))
    return frame


def spots_frame(spots) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "source_index": spots.source_index,
            "x_mm": spots.xy[:, 0],
            "y_mm": spots.xy[:, 1],
            "weight": spots.weight,
        }
    )


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        # JSON has no inf or nan
        return value if np.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path: str, payload: Dict[str, Any], provenance: Optional[Provenance] = None) -> str:
    ensure_dir(os.path.dirname(path) or ".")
    document = _jsonable(payload)
    if provenance is not None:
        document = {"_meta": provenance.to_dict(), **document}

    with open(path, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2)
        f.write("\n")

    logger.info(f"wrote {path}")
    return path
