"""Vector form of Snell's law."""
from typing import Tuple

import numpy as np

from vlcsim.errors import TotalInternalReflection


def refract_batch(
    incident: np.ndarray, normals: np.ndarray, n1, n2
) -> Tuple[np.ndarray, np.ndarray]:
    """refract N unit directions through unit normals facing the incoming rays.

    Returns:
        (transmitted, ok): transmitted unit directions and a mask that is False
        where total internal reflection occurs (those rows are NaN).
    """
    incident = np.atleast_2d(incident)
    normals = np.atleast_2d(normals)

    eta = np.asarray(n1, dtype=float) / np.asarray(n2, dtype=float)
    cos_i = -np.einsum("ij,ij->i", incident, normals)
    k = 1.0 - eta**2 * (1.0 - cos_i**2)

    ok = k >= 0.0
    root = np.sqrt(np.where(ok, k, 0.0))

    transmitted = (
        np.reshape(eta, (-1, 1)) * incident
        + np.reshape(eta * cos_i - root, (-1, 1)) * normals
    )
    transmitted /= np.linalg.norm(transmitted, axis=1, keepdims=True)
    transmitted[~ok] = np.nan

    return transmitted, ok


def refract(incident: np.ndarray, normal: np.ndarray, n1: float, n2: float) -> np.ndarray:
    """transmitted unit direction for one ray.

    Raises:
        ValueError: the normal does not face the incoming ray.
        TotalInternalReflection: beyond the critical angle when n1 > n2.
    """
    incident = np.asarray(incident, dtype=float)
    normal = np.asarray(normal, dtype=float)

    if np.dot(incident, normal) >= 0:
        raise ValueError("normal must face the incoming ray (incident . normal < 0)")

    transmitted, ok = refract_batch(incident[None, :], normal[None, :], n1, n2)
    if not ok[0]:
        sin_i = np.sqrt(max(0.0, 1.0 - np.dot(incident, normal) ** 2))
        raise TotalInternalReflection(
            f"sin(theta1)={sin_i:.6f} exceeds n2/n1={n2 / n1:.6f}"
        )

    return transmitted[0]
