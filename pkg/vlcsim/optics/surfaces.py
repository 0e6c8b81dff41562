"""Rotationally symmetric aspheric surfaces and ray intersection.

Surfaces live in a frame whose z axis is the optical axis, with the source
above (+z) and light travelling towards -z. A surface's height is

    z(x, y) = vertex_z + s * sag(r),    sag(r) = alpha2 r^2 + alpha4 r^4

where s = +1 when the sag opens towards the source and s = -1 when it opens
towards the detector (sag positive along propagation, as optical design
programs count it). Curvature and conic terms are identically zero.

Every batch function takes `(N, 3)` arrays and returns masks instead of
raising, so a lost ray never interrupts a batch.
"""
import enum
from typing import Optional, Tuple

import attr
import numpy as np

from vlcsim.constants import INTERSECT_TOL, MIN_HIT_T
from vlcsim.errors import OutOfApertureError

Vec3 = np.ndarray

NEWTON_MAX_ITERS = 50


def normalize(v: np.ndarray) -> np.ndarray:
    """unit vector(s) along `v`; works on (3,) and (N, 3)."""
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


class Orientation(enum.Enum):
    """which way the sag of a surface opens."""

    TOWARD_SOURCE = "toward_source"
    TOWARD_DETECTOR = "toward_detector"

    @property
    def sign(self) -> float:
        return 1.0 if self is Orientation.TOWARD_SOURCE else -1.0


def _positive(instance, attribute, value):
    if not value > 0:
        raise ValueError(f"{attribute.name} must be > 0, got {value}")


def _finite(instance, attribute, value):
    if not np.isfinite(value):
        raise ValueError(f"{attribute.name} must be finite, got {value}")


@attr.s(frozen=True, slots=True)
class AsphericSurface:
    alpha2: float = attr.ib(converter=float, validator=_finite)
    aperture_radius: float = attr.ib(converter=float, validator=_positive)
    alpha4: float = attr.ib(default=0.0, converter=float, validator=_finite)
    vertex_z: float = attr.ib(default=0.0, converter=float, validator=_finite)
    orientation: Orientation = attr.ib(
        default=Orientation.TOWARD_SOURCE, converter=Orientation
    )

    @property
    def sign(self) -> float:
        return self.orientation.sign

    def height(self, r: np.ndarray) -> np.ndarray:
        """global z of the surface at radial distance r (no aperture check)."""
        return self.vertex_z + self.sign * _sag(self, r)


@attr.s(frozen=True, slots=True, eq=False)
class Ray:
    origin: Vec3 = attr.ib(converter=lambda v: np.asarray(v, dtype=float))
    direction: Vec3 = attr.ib(converter=lambda v: np.asarray(v, dtype=float))
    weight: float = attr.ib(default=1.0, converter=float)
    medium_index: float = attr.ib(default=1.0, converter=float)

    @direction.validator
    def _check_direction(self, attribute, value):
        if abs(np.linalg.norm(value) - 1.0) > 1e-12:
            raise ValueError("ray direction must be a unit vector")

    @weight.validator
    def _check_weight(self, attribute, value):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"ray weight must lie in [0, 1], got {value}")

    @classmethod
    def toward(cls, origin, direction, weight=1.0, medium_index=1.0) -> "Ray":
        """build a ray, normalizing `direction` first."""
        return cls(origin, normalize(direction), weight, medium_index)

    def at(self, t: float) -> Vec3:
        return self.origin + t * self.direction


@attr.s(frozen=True, slots=True, eq=False)
class SurfaceHit:
    t: float = attr.ib()
    point: Vec3 = attr.ib()


########## SAG AND NORMALS ##########


def _sag(surface: AsphericSurface, r):
    r2 = np.square(r)
    return surface.alpha2 * r2 + surface.alpha4 * r2 * r2


def sag(surface: AsphericSurface, r):
    """axial departure of the surface from its vertex plane at radius r.

    Raises OutOfApertureError when r lies outside [0, aperture_radius].
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(r_arr > surface.aperture_radius + INTERSECT_TOL):
        raise OutOfApertureError(
            f"r={r} outside aperture radius {surface.aperture_radius} mm"
        )

    result = _sag(surface, r_arr)
    return float(result) if result.ndim == 0 else result


def surface_normals(surface: AsphericSurface, points: np.ndarray) -> np.ndarray:
    """unit normals at `points` (N, 3), oriented towards +z (the incoming side)."""
    points = np.atleast_2d(points)
    x, y = points[:, 0], points[:, 1]

    # d(sag)/dx = sag'(r) x / r = 2 alpha2 x + 4 alpha4 r^2 x, regular at r = 0
    r2 = x * x + y * y
    k = 2.0 * surface.alpha2 + 4.0 * surface.alpha4 * r2

    normals = np.empty_like(points, dtype=float)
    normals[:, 0] = -surface.sign * k * x
    normals[:, 1] = -surface.sign * k * y
    normals[:, 2] = 1.0

    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


def surface_normal(surface: AsphericSurface, point: Vec3) -> Vec3:
    return surface_normals(surface, np.asarray(point, dtype=float)[None, :])[0]


########## INTERSECTION ##########


def _radial_coeffs(origins, directions):
    """rho^2(t) = A t^2 + B t + C for rays o + t d."""
    ox, oy = origins[:, 0], origins[:, 1]
    dx, dy = directions[:, 0], directions[:, 1]

    A = dx * dx + dy * dy
    B = 2.0 * (ox * dx + oy * dy)
    C = ox * ox + oy * oy

    return A, B, C


def _paraboloid_roots(surface, origins, directions):
    """both roots of the alpha2-only surface equation (NaN when complex)."""
    A, B, C = _radial_coeffs(origins, directions)
    sa = surface.sign * surface.alpha2

    # sa * rho^2(t) - (o_z + t d_z - v) = 0
    a = sa * A
    b = sa * B - directions[:, 2]
    c = sa * C - (origins[:, 2] - surface.vertex_z)

    t1 = np.full(len(origins), np.nan)
    t2 = np.full(len(origins), np.nan)

    with np.errstate(divide="ignore", invalid="ignore"):
        linear = np.abs(a) <= 1e-14 * np.maximum(np.abs(b), 1e-300)
        t1[linear] = -c[linear] / b[linear]

        quad = ~linear
        disc = b[quad] ** 2 - 4.0 * a[quad] * c[quad]
        real = disc >= 0
        sqrt_disc = np.sqrt(np.where(real, disc, 0.0))

        # numerically stable pair of roots
        sgn = np.where(b[quad] >= 0, 1.0, -1.0)
        q = -0.5 * (b[quad] + sgn * sqrt_disc)
        r1 = np.where(real, q / a[quad], np.nan)
        r2 = np.where(real & (q != 0), c[quad] / q, np.nan)

        t1[quad] = r1
        t2[quad] = r2

    return t1, t2


def _newton_refine(surface, origins, directions, t0):
    """safeguarded Newton on g(t) = s*sag(rho(t)) - (z(t) - v)."""
    A, B, C = _radial_coeffs(origins, directions)
    s = surface.sign
    dz = directions[:, 2]
    oz = origins[:, 2] - surface.vertex_z

    t = np.array(t0, dtype=float)
    converged = np.zeros(len(t), dtype=bool)

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for _ in range(NEWTON_MAX_ITERS):
            rho2 = (A * t + B) * t + C
            g = s * (surface.alpha2 * rho2 + surface.alpha4 * rho2 * rho2) - (oz + t * dz)
            dg = s * (surface.alpha2 + 2.0 * surface.alpha4 * rho2) * (2.0 * A * t + B) - dz

            step = np.where(np.abs(dg) > 0, g / dg, np.nan)
            active = ~converged & np.isfinite(step)
            t = np.where(active, t - step, t)

            converged |= np.abs(step) <= 1e-13 * (1.0 + np.abs(t))
            if np.all(converged | ~np.isfinite(step)):
                break

    rho2 = (A * t + B) * t + C
    residual = s * (surface.alpha2 * rho2 + surface.alpha4 * rho2 * rho2) - (oz + t * dz)
    ok = converged & np.isfinite(t) & (np.abs(residual) < INTERSECT_TOL)

    return np.where(ok, t, np.nan)


def intersect_batch(
    surface: AsphericSurface,
    origins: np.ndarray,
    directions: np.ndarray,
    method: str = "auto",
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """intersect N rays with `surface`.

    Args:
        method: 'auto' solves the alpha2-only case in closed form and refines
            quartic surfaces by Newton from the paraboloid root; 'newton'
            always iterates, starting from the vertex-plane crossing.

    Returns:
        (t, points, hit): hit parameter (NaN on a miss), hit points and mask.
    """
    origins = np.atleast_2d(np.asarray(origins, dtype=float))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))

    def _in_aperture(t):
        p = origins + t[:, None] * directions
        rho = np.hypot(p[:, 0], p[:, 1])
        return (
            np.isfinite(t)
            & (t > MIN_HIT_T)
            & (rho <= surface.aperture_radius + INTERSECT_TOL)
        )

    if method == "newton":
        with np.errstate(divide="ignore", invalid="ignore"):
            t_plane = (surface.vertex_z - origins[:, 2]) / directions[:, 2]
        candidates = [_newton_refine(surface, origins, directions, t_plane)]
    elif method == "auto":
        t1, t2 = _paraboloid_roots(surface, origins, directions)
        if surface.alpha4 != 0.0:
            with np.errstate(divide="ignore", invalid="ignore"):
                t_plane = (surface.vertex_z - origins[:, 2]) / directions[:, 2]
            seed1 = np.where(np.isfinite(t1), t1, t_plane)
            seed2 = np.where(np.isfinite(t2), t2, t_plane)
            t1 = _newton_refine(surface, origins, directions, seed1)
            t2 = _newton_refine(surface, origins, directions, seed2)
        candidates = [t1, t2]
    else:
        raise ValueError(f"unknown intersection method {method!r}")

    # smallest admissible root
    best = np.full(len(origins), np.inf)
    for t in candidates:
        ok = _in_aperture(t)
        best = np.where(ok & (t < best), t, best)

    hit = np.isfinite(best)
    t_hit = np.where(hit, best, np.nan)
    points = origins + np.where(hit, best, 0.0)[:, None] * directions

    return t_hit, points, hit


def intersect(
    ray: Ray, surface: AsphericSurface, method: str = "auto"
) -> Optional[SurfaceHit]:
    """first crossing of `ray` with `surface` inside its aperture, or None (miss)."""
    if ray.direction[2] == 0.0:
        raise ValueError("ray must have a nonzero axial direction component")

    t, points, hit = intersect_batch(
        surface, ray.origin[None, :], ray.direction[None, :], method=method
    )
    if not hit[0]:
        return None

    return SurfaceHit(t=float(t[0]), point=points[0])
