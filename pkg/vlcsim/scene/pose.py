"""Rigid-body misalignment of an array (and optionally its lenses).

A `Pose` is a user-facing offset: translate by `translation` and rotate by
`angle_deg` about `axis`, pivoting on the array's geometric center shifted by
`pivot_offset`. A `RigidTransform` is the accumulated world placement x -> Rx + t
that the scene keeps per component.
"""
from typing import Tuple

import attr
import numpy as np
from scipy.spatial.transform import Rotation


def _vec(value) -> Tuple[float, float, float]:
    arr = np.asarray(value, dtype=float).reshape(3)
    return tuple(float(v) for v in arr)


def _mat(value) -> Tuple[Tuple[float, ...], ...]:
    arr = np.asarray(value, dtype=float).reshape(3, 3)
    return tuple(tuple(float(v) for v in row) for row in arr)


@attr.s(frozen=True, slots=True)
class RigidTransform:
    rotation: Tuple[Tuple[float, ...], ...] = attr.ib(
        default=((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)), converter=_mat
    )
    translation: Tuple[float, float, float] = attr.ib(
        default=(0.0, 0.0, 0.0), converter=_vec
    )

    @property
    def R(self) -> np.ndarray:
        return np.array(self.rotation)

    @property
    def t(self) -> np.ndarray:
        return np.array(self.translation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """world position of local point(s); works on (3,) and (N, 3)."""
        return np.asarray(points) @ self.R.T + self.t

    def apply_direction(self, directions: np.ndarray) -> np.ndarray:
        return np.asarray(directions) @ self.R.T

    def inverse_apply(self, points: np.ndarray) -> np.ndarray:
        """local coordinates of world point(s)."""
        return (np.asarray(points) - self.t) @ self.R

    def inverse_apply_direction(self, directions: np.ndarray) -> np.ndarray:
        return np.asarray(directions) @ self.R

    def then(self, other: "RigidTransform") -> "RigidTransform":
        """`other` applied after `self`."""
        return RigidTransform(other.R @ self.R, other.R @ self.t + other.t)


IDENTITY = RigidTransform()


@attr.s(frozen=True, slots=True)
class Pose:
    translation: Tuple[float, float, float] = attr.ib(
        default=(0.0, 0.0, 0.0), converter=_vec
    )
    axis: Tuple[float, float, float] = attr.ib(default=(0.0, 0.0, 1.0), converter=_vec)
    angle_deg: float = attr.ib(default=0.0, converter=float)
    pivot_offset: Tuple[float, float, float] = attr.ib(
        default=(0.0, 0.0, 0.0), converter=_vec
    )

    @axis.validator
    def _check_axis(self, attribute, value):
        if abs(np.linalg.norm(value) - 1.0) > 1e-12:
            raise ValueError(f"rotation axis must be a unit vector, got {value}")

    @angle_deg.validator
    def _check_angle(self, attribute, value):
        if not np.isfinite(value):
            raise ValueError(f"rotation angle must be finite, got {value}")

    @classmethod
    def translate(cls, x: float = 0.0, y: float = 0.0, z: float = 0.0) -> "Pose":
        return cls(translation=(x, y, z))

    @classmethod
    def rotate(cls, axis, angle_deg: float, pivot_offset=(0.0, 0.0, 0.0)) -> "Pose":
        axis = np.asarray(axis, dtype=float)
        return cls(
            axis=axis / np.linalg.norm(axis),
            angle_deg=angle_deg,
            pivot_offset=pivot_offset,
        )

    @property
    def is_identity(self) -> bool:
        return self.angle_deg == 0.0 and not any(self.translation)

    def rotation_matrix(self) -> np.ndarray:
        rotvec = np.radians(self.angle_deg) * np.asarray(self.axis)
        return Rotation.from_rotvec(rotvec).as_matrix()

    def about(self, center: np.ndarray) -> RigidTransform:
        """this pose as a world transform pivoting on `center` (+ pivot_offset)."""
        R = self.rotation_matrix()
        pivot = np.asarray(center, dtype=float) + np.asarray(self.pivot_offset)
        return RigidTransform(R, pivot - R @ pivot + np.asarray(self.translation))


def compose(second: Pose, first: Pose) -> Pose:
    """the single pose equivalent to applying `first` then `second`.

    Both rotations pivot on the array center, which `first` moves along with
    the array, so the result is exact only for zero pivot offsets.
    """
    if any(first.pivot_offset) or any(second.pivot_offset):
        raise ValueError("poses with a pivot offset do not compose about the center")

    R = Rotation.from_matrix(second.rotation_matrix() @ first.rotation_matrix())
    rotvec = R.as_rotvec()
    angle = float(np.linalg.norm(rotvec))
    translation = np.asarray(first.translation) + np.asarray(second.translation)

    if angle == 0.0:
        return Pose(translation=translation)

    return Pose(
        translation=translation,
        axis=rotvec / angle,
        angle_deg=np.degrees(angle),
    )
