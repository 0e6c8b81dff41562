"""Condition-number objective over the four quadratic lens coefficients."""
from typing import Optional, Tuple

import attr
import numpy as np
from loguru import logger

from vlcsim.constants import ALPHA_BOUND, DEFAULT_SEED, PENALTY
from vlcsim.errors import InfeasibleLensError
from vlcsim.metrics.chanmetrics import condition_number
from vlcsim.raytrace.estimate import estimate_channel


@attr.s(frozen=True, slots=True)
class LensParams:
    alpha_convex_front: float = attr.ib(converter=float)
    alpha_convex_back: float = attr.ib(converter=float)
    alpha_concave_front: float = attr.ib(converter=float)
    alpha_concave_back: float = attr.ib(converter=float)

    def __attrs_post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise InfeasibleLensError(f"lens coefficients must be finite: {self}")

    def as_array(self) -> np.ndarray:
        return np.array(attr.astuple(self))

    @classmethod
    def from_array(cls, values) -> "LensParams":
        return cls(*np.asarray(values, dtype=float).tolist())

    @classmethod
    def from_scene(cls, scene) -> "LensParams":
        convex, concave = _pair(scene)
        return cls(
            convex.front.alpha2,
            convex.back.alpha2,
            concave.front.alpha2,
            concave.back.alpha2,
        )

    def within(self, bound: float = ALPHA_BOUND) -> bool:
        return bool(np.all(np.abs(self.as_array()) <= bound))

    def apply(self, scene):
        """`scene` with these coefficients on its lens pair.

        Raises InfeasibleLensError on crossing or overlapping surfaces.
        """
        convex, concave = _pair(scene)
        lenses = (
            convex.with_alphas(self.alpha_convex_front, self.alpha_convex_back),
            concave.with_alphas(self.alpha_concave_front, self.alpha_concave_back),
        )
        return attr.evolve(scene, lenses=lenses)


def _pair(scene) -> Tuple:
    if len(scene.lenses) != 2:
        raise ValueError(f"lens optimization needs exactly two lenses, got {len(scene.lenses)}")
    return scene.lenses[0], scene.lenses[1]


def objective(
    params: LensParams,
    scene_template,
    budget: int,
    seed: int = DEFAULT_SEED,
    n_workers: Optional[int] = 1,
    bound: float = ALPHA_BOUND,
) -> float:
    """condition number of the traced channel, or PENALTY for unusable geometry.

    The seed stays fixed across calls so two parameter sets see the same
    random rays.
    """
    if not params.within(bound):
        logger.trace(f"{params} outside +/-{bound}")
        return PENALTY

    try:
        scene = params.apply(scene_template)
    except InfeasibleLensError as e:
        logger.trace(f"{params} infeasible: {e}")
        return PENALTY

    channel, _ = estimate_channel(scene, budget, seed, n_workers=n_workers)
    if not np.any(channel.gains):
        return PENALTY

    kappa = condition_number(channel)
    return kappa if np.isfinite(kappa) else PENALTY
