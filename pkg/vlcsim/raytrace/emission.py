"""Generalized Lambertian emission restricted to an importance cone.

Each LED radiates with intensity proportional to cos^Cn(phi) about its normal.
Only directions inside a cone aimed at the first aperture can reach the
receiver, so directions are drawn from the law restricted to that cone and
every ray carries weight (cone mass) / (number of rays).
"""
from typing import Optional, Tuple

import attr
import numpy as np
from scipy import integrate

from vlcsim.constants import CONE_PADDING
from vlcsim.errors import DegenerateConeError
from vlcsim.optics.surfaces import Ray, normalize
from vlcsim.scene.arrays import LedArraySpec
from vlcsim.scene.pose import IDENTITY, RigidTransform

# axis-to-normal angle below which the cone counts as coaxial
COAXIAL_TOL = 1e-12


@attr.s(frozen=True, slots=True)
class EmissionCone:
    axis: Tuple[float, float, float] = attr.ib(
        converter=lambda v: tuple(float(x) for x in normalize(v))
    )
    half_angle: float = attr.ib(converter=float)

    @half_angle.validator
    def _check_half_angle(self, attribute, value):
        if not value > 0:
            raise DegenerateConeError(f"cone half-angle must be > 0, got {value} rad")

    @classmethod
    def hemisphere(cls, normal) -> "EmissionCone":
        return cls(axis=normal, half_angle=np.pi / 2.0)


def _frame(axis: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """two unit vectors completing `axis` to a right-handed basis."""
    helper = np.array([1.0, 0.0, 0.0]) if abs(axis[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = normalize(np.cross(axis, helper))
    v = np.cross(axis, u)
    return u, v


def _offaxis_angle(cone: EmissionCone, normal: np.ndarray) -> float:
    axis = np.asarray(cone.axis)
    return float(np.arctan2(np.linalg.norm(np.cross(axis, normal)), np.dot(axis, normal)))


def cone_mass(cone: EmissionCone, normal: np.ndarray, lambertian_exponent: float) -> float:
    """probability that a cos^Cn emitter with axis `normal` radiates into `cone`."""
    normal = normalize(normal)
    cn = float(lambertian_exponent)
    gamma = min(cone.half_angle, np.pi)
    delta = _offaxis_angle(cone, normal)

    if delta - gamma >= np.pi / 2.0:
        return 0.0

    if delta < COAXIAL_TOL:
        edge = np.cos(min(gamma, np.pi / 2.0))
        return float(1.0 - edge ** (cn + 1.0))

    # in the cone's polar frame, cos(phi) = cos t cos(delta) + sin t cos(psi) sin(delta)
    cos_d, sin_d = np.cos(delta), np.sin(delta)

    def density(psi, theta):
        c = np.cos(theta) * cos_d + np.sin(theta) * np.cos(psi) * sin_d
        return (cn + 1.0) / (2.0 * np.pi) * max(c, 0.0) ** cn * np.sin(theta)

    # symmetric in psi, integrate one half
    half, _ = integrate.dblquad(
        density,
        0.0,
        gamma,
        lambda _: 0.0,
        lambda _: np.pi,
        epsabs=0.0,
        epsrel=1e-11,
    )
    return float(min(2.0 * half, 1.0))


def sample_directions(
    cone: EmissionCone,
    normal: np.ndarray,
    lambertian_exponent: float,
    rng: np.random.Generator,
    n: int,
) -> np.ndarray:
    """(n, 3) unit directions from the cos^Cn law restricted to `cone`."""
    normal = normalize(normal)
    cn = float(lambertian_exponent)
    axis = np.asarray(cone.axis)
    gamma = min(cone.half_angle, np.pi)
    delta = _offaxis_angle(cone, normal)

    if delta < COAXIAL_TOL:
        # truncated inverse CDF: F(phi) = 1 - cos^(Cn+1)(phi)
        edge = np.cos(min(gamma, np.pi / 2.0)) ** (cn + 1.0)
        cos_phi = rng.uniform(edge, 1.0, n) ** (1.0 / (cn + 1.0))
        psi = rng.uniform(0.0, 2.0 * np.pi, n)
        return _assemble(normal, cos_phi, psi)

    if delta - gamma >= np.pi / 2.0:
        raise DegenerateConeError("cone lies entirely behind the emitter")

    # the density peaks where the cone comes closest to the normal
    peak = np.cos(max(delta - gamma, 0.0)) ** cn
    accepted = []
    n_accepted = 0
    while n_accepted < n:
        block = max(2 * (n - n_accepted), 64)
        cos_t = rng.uniform(np.cos(gamma), 1.0, block)
        psi = rng.uniform(0.0, 2.0 * np.pi, block)
        dirs = _assemble(axis, cos_t, psi)

        c = np.clip(dirs @ normal, 0.0, None)
        keep = rng.uniform(0.0, peak, block) < c**cn
        accepted.append(dirs[keep])
        n_accepted += int(keep.sum())

    return np.concatenate(accepted)[:n]


def _assemble(axis: np.ndarray, cos_t: np.ndarray, psi: np.ndarray) -> np.ndarray:
    u, v = _frame(axis)
    sin_t = np.sqrt(np.clip(1.0 - cos_t**2, 0.0, None))
    dirs = (
        cos_t[:, None] * axis
        + (sin_t * np.cos(psi))[:, None] * u
        + (sin_t * np.sin(psi))[:, None] * v
    )
    return normalize(dirs)


def sample_origins(
    led_index: int,
    spec: LedArraySpec,
    rng: np.random.Generator,
    n: int,
    pose: RigidTransform = IDENTITY,
) -> np.ndarray:
    """(n, 3) points uniform over the emitting square of LED `led_index`."""
    center = spec.local_centers()[led_index]
    half = spec.element_size / 2.0

    local = np.empty((n, 3))
    local[:, 0] = center[0] + rng.uniform(-half, half, n)
    local[:, 1] = center[1] + rng.uniform(-half, half, n)
    local[:, 2] = center[2]

    return pose.apply(local)


def sample_emission_batch(
    led_index: int,
    spec: LedArraySpec,
    rng: np.random.Generator,
    cone: EmissionCone,
    n: int,
    pose: RigidTransform = IDENTITY,
) -> Tuple[np.ndarray, np.ndarray]:
    """origins and directions of `n` rays leaving LED `led_index`."""
    normal = pose.apply_direction(np.array([0.0, 0.0, -1.0]))
    origins = sample_origins(led_index, spec, rng, n, pose)
    directions = sample_directions(cone, normal, spec.lambertian_exponent, rng, n)
    return origins, directions


def sample_emission(
    led_index: int,
    spec: LedArraySpec,
    rng: np.random.Generator,
    cone: EmissionCone,
    n_rays: int = 1,
    pose: RigidTransform = IDENTITY,
    mass: Optional[float] = None,
) -> Ray:
    """one emitted ray, weighted as one of `n_rays` draws from `cone`."""
    if mass is None:
        normal = pose.apply_direction(np.array([0.0, 0.0, -1.0]))
        mass = cone_mass(cone, normal, spec.lambertian_exponent)

    origins, directions = sample_emission_batch(led_index, spec, rng, cone, 1, pose)
    return Ray(origins[0], directions[0], weight=mass / n_rays)


def importance_cone(scene, led_index: int, padding: float = CONE_PADDING) -> EmissionCone:
    """cone from the LED center that covers the first aperture from anywhere on the emitter."""
    apex = scene.led_center(led_index)

    if scene.lenses:
        first = scene.lenses[0]
        target = scene.lens_pose.apply(np.array([0.0, 0.0, first.front_vertex_z]))
        radius = first.aperture_radius
    else:
        target = scene.pd_array_center()
        radius = scene.pds.half_diagonal

    offset = target - apex
    distance = float(np.linalg.norm(offset))
    rho = scene.leds.emitter_half_diagonal

    half_angle = padding * (np.arctan2(radius, distance) + np.arctan2(rho, distance))
    return EmissionCone(axis=offset, half_angle=min(half_angle, np.pi))
