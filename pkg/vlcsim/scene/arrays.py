"""Square LED and PD arrays laid out on a regular grid."""
from typing import Union

import attr
import numpy as np

from vlcsim.constants import LAMBERTIAN_EXPONENT


def _at_least(bound):
    def check(instance, attribute, value):
        if value < bound:
            raise ValueError(f"{attribute.name} must be >= {bound}, got {value}")

    return check


def _positive(instance, attribute, value):
    if not value > 0:
        raise ValueError(f"{attribute.name} must be > 0, got {value}")


@attr.s(frozen=True, slots=True)
class _GridSpec:
    grid_n: int = attr.ib(converter=int, validator=_at_least(1))
    element_size: float = attr.ib(converter=float, validator=_positive)
    gap: float = attr.ib(converter=float, validator=_at_least(0.0))
    plane_z: float = attr.ib(converter=float)

    @property
    def pitch(self) -> float:
        return self.element_size + self.gap

    @property
    def n_elements(self) -> int:
        return self.grid_n * self.grid_n

    @property
    def span(self) -> float:
        """edge-to-edge width of the array."""
        return self.grid_n * self.element_size + (self.grid_n - 1) * self.gap

    @property
    def half_diagonal(self) -> float:
        return self.span / np.sqrt(2.0)

    @property
    def nominal_center(self) -> np.ndarray:
        return np.array([0.0, 0.0, self.plane_z])

    def local_centers(self) -> np.ndarray:
        """(grid_n^2, 3) element centers before any pose, row-major."""
        offsets = (np.arange(self.grid_n) - (self.grid_n - 1) / 2.0) * self.pitch
        ys, xs = np.meshgrid(offsets, offsets, indexing="ij")

        centers = np.empty((self.n_elements, 3))
        centers[:, 0] = xs.ravel()
        centers[:, 1] = ys.ravel()
        centers[:, 2] = self.plane_z

        return centers


@attr.s(frozen=True, slots=True)
class LedArraySpec(_GridSpec):
    lambertian_exponent: float = attr.ib(
        default=LAMBERTIAN_EXPONENT, converter=float, validator=_at_least(1.0)
    )
    # optical power of one LED; scales every gain it contributes
    total_power_per_led: float = attr.ib(default=1.0, converter=float, validator=_positive)

    @property
    def half_power_angle_deg(self) -> float:
        """polar angle where cos^Cn falls to one half."""
        return float(np.degrees(np.arccos(2.0 ** (-1.0 / self.lambertian_exponent))))

    @property
    def emitter_half_diagonal(self) -> float:
        return self.element_size / np.sqrt(2.0)


@attr.s(frozen=True, slots=True)
class PdArraySpec(_GridSpec):
    """PDs are numbered in the image frame.

    The lens pair forms an inverted image, so PD m sits where LED m lands:
    the LED layout turned by 180 degrees. The aligned channel then peaks on
    its diagonal.
    """

    def local_centers(self) -> np.ndarray:
        centers = _GridSpec.local_centers(self)
        centers[:, :2] *= -1.0
        return centers

    def locate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """PD index under each local (x, y), or -1 in gaps and outside the array."""
        # offsets from the +x / +y corner, where PD 0 sits
        right = self.span / 2.0
        u = right - np.asarray(x, dtype=float)
        v = right - np.asarray(y, dtype=float)

        col = np.floor(u / self.pitch).astype(np.int64)
        row = np.floor(v / self.pitch).astype(np.int64)

        inside = (
            (col >= 0)
            & (col < self.grid_n)
            & (row >= 0)
            & (row < self.grid_n)
            & (u - col * self.pitch <= self.element_size)
            & (v - row * self.pitch <= self.element_size)
        )

        return np.where(inside, row * self.grid_n + col, -1)


ArraySpec = Union[LedArraySpec, PdArraySpec]


def element_center(spec: ArraySpec, index: int, pose=None) -> np.ndarray:
    """world position of element `index` (0-based, PDs in image order, see PdArraySpec).

    Args:
        pose: optional RigidTransform placing the array in the world.
    """
    if not 0 <= index < spec.n_elements:
        raise IndexError(
            f"element index {index} out of range for a {spec.grid_n}x{spec.grid_n} array"
        )

    center = spec.local_centers()[index]
    if pose is not None:
        center = pose.apply(center)

    return center
