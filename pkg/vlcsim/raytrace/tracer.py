"""Sequential propagation of rays through the lens stack onto the PD plane."""
import enum
from typing import Optional

import attr
import numpy as np

from vlcsim.constants import MIN_HIT_T
from vlcsim.optics.refraction import refract_batch
from vlcsim.optics.surfaces import Ray, intersect_batch, surface_normals


class Fate(enum.IntEnum):
    """where a ray ends up; every traced ray gets exactly one."""

    COLLECTED = 0
    STRAY = 1
    LOST = 2


@attr.s(frozen=True, slots=True, eq=False)
class BatchTrace:
    # local detector-plane coordinates (NaN for lost rays)
    xy: np.ndarray = attr.ib()
    fate: np.ndarray = attr.ib()
    # PD index for collected rays, -1 otherwise
    pd_index: np.ndarray = attr.ib()

    @property
    def on_plane(self) -> np.ndarray:
        return self.fate != Fate.LOST


@attr.s(frozen=True, slots=True)
class DetectorHit:
    x: float = attr.ib()
    y: float = attr.ib()
    weight: float = attr.ib()
    pd_index: Optional[int] = attr.ib(default=None)


def propagate_lenses(scene, origins: np.ndarray, directions: np.ndarray):
    """push rays through every lens surface; returns world rays and an alive mask."""
    alive = np.ones(len(origins), dtype=bool)
    if not scene.lenses:
        return origins, directions, alive

    pose = scene.lens_pose
    o = pose.inverse_apply(origins)
    d = pose.inverse_apply_direction(directions)

    for lens in scene.lenses:
        for surface, n1, n2 in lens.interfaces(scene.ambient_index):
            idx = np.flatnonzero(alive)
            if len(idx) == 0:
                break

            _, points, hit = intersect_batch(surface, o[idx], d[idx])
            normals = surface_normals(surface, points)

            # the normal must face the incoming ray
            flip = np.einsum("ij,ij->i", d[idx], normals) > 0
            normals[flip] *= -1.0

            refracted, ok = refract_batch(d[idx], normals, n1, n2)
            ok &= hit

            o[idx[ok]] = points[ok]
            d[idx[ok]] = refracted[ok]
            alive[idx[~ok]] = False

    return pose.apply(o), pose.apply_direction(d), alive


def trace_batch(scene, origins: np.ndarray, directions: np.ndarray) -> BatchTrace:
    """trace N world rays from the LED plane to the detector plane."""
    origins = np.atleast_2d(np.asarray(origins, dtype=float))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    n = len(origins)

    o, d, alive = propagate_lenses(scene, origins.copy(), directions.copy())

    # detector plane in the PD array's own frame
    o = scene.pd_pose.inverse_apply(o)
    d = scene.pd_pose.inverse_apply_direction(d)

    with np.errstate(divide="ignore", invalid="ignore"):
        t = (scene.pds.plane_z - o[:, 2]) / d[:, 2]
    reaches = alive & np.isfinite(t) & (t > MIN_HIT_T)

    xy = np.full((n, 2), np.nan)
    xy[reaches] = o[reaches, :2] + t[reaches, None] * d[reaches, :2]

    pd_index = np.full(n, -1, dtype=np.int64)
    pd_index[reaches] = scene.pds.locate(xy[reaches, 0], xy[reaches, 1])

    fate = np.full(n, Fate.LOST, dtype=np.int8)
    fate[reaches] = Fate.STRAY
    fate[pd_index >= 0] = Fate.COLLECTED

    return BatchTrace(xy=xy, fate=fate, pd_index=pd_index)


def trace(ray: Ray, scene) -> Optional[DetectorHit]:
    """detector-plane hit of a single ray, or None when it is lost."""
    result = trace_batch(scene, ray.origin[None, :], ray.direction[None, :])
    if result.fate[0] == Fate.LOST:
        return None

    index = int(result.pd_index[0])
    return DetectorHit(
        x=float(result.xy[0, 0]),
        y=float(result.xy[0, 1]),
        weight=ray.weight,
        pd_index=index if index >= 0 else None,
    )
