"""The full optical link: LED array, lens stack, PD array and their placements."""
import enum
import hashlib
import json
from typing import Any, Dict, Tuple

import attr
import numpy as np

from vlcsim.constants import (
    AMBIENT_INDEX,
    CONCAVE_ALPHA_BACK,
    CONCAVE_ALPHA_FRONT,
    CONCAVE_APERTURE,
    CONCAVE_FRONT_Z,
    CONCAVE_THICKNESS,
    CONVEX_ALPHA_BACK,
    CONVEX_ALPHA_FRONT,
    CONVEX_APERTURE,
    CONVEX_BETA_BACK,
    CONVEX_BETA_FRONT,
    CONVEX_FRONT_Z,
    CONVEX_THICKNESS,
    LAMBERTIAN_EXPONENT,
    LED_GAP,
    LED_GRID_N,
    LED_PLANE_Z,
    LED_SIZE,
    LENS_INDEX,
    PD_GAP,
    PD_GRID_N,
    PD_PLANE_Z,
    PD_SIZE,
)
from vlcsim.errors import InfeasibleLensError
from vlcsim.optics.lens import FEASIBILITY_SAMPLES, LensElement
from vlcsim.optics.surfaces import Orientation
from vlcsim.scene.arrays import LedArraySpec, PdArraySpec, element_center
from vlcsim.scene.pose import IDENTITY, Pose, RigidTransform


class Target(enum.Enum):
    TRANSMITTER = "tx"
    RECEIVER = "rx"


def _clearance(upper: LensElement, lower: LensElement) -> float:
    """smallest air gap between two consecutive lenses over their shared aperture."""
    radius = min(upper.aperture_radius, lower.aperture_radius)
    r = np.sqrt(np.linspace(0.0, radius**2, FEASIBILITY_SAMPLES))
    return float(np.min(upper.back.height(r) - lower.front.height(r)))


def _lens_stack(instance, attribute, lenses):
    for lens in lenses:
        if lens.aperture_diameter <= 0:
            raise ValueError("lens apertures must be positive")
        lens.validate()

    heights = []
    for lens in lenses:
        heights.extend([lens.front_vertex_z, lens.back_vertex_z])

    if any(a <= b for a, b in zip(heights, heights[1:])):
        raise ValueError(
            f"lens vertices must strictly decrease from LEDs to PDs, got {heights}"
        )

    for upper, lower in zip(lenses, lenses[1:]):
        gap = _clearance(upper, lower)
        if not gap > 0.0:
            raise InfeasibleLensError(
                f"lenses at {upper.front_vertex_z} and {lower.front_vertex_z} mm overlap "
                f"(min air gap {gap:.4f} mm)"
            )

    if heights and not (instance.leds.plane_z > heights[0] and heights[-1] > instance.pds.plane_z):
        raise ValueError("lens stack must sit between the LED and PD planes")


@attr.s(frozen=True, slots=True)
class Scene:
    leds: LedArraySpec = attr.ib()
    pds: PdArraySpec = attr.ib()
    lenses: Tuple[LensElement, ...] = attr.ib(converter=tuple, validator=_lens_stack)
    ambient_index: float = attr.ib(default=AMBIENT_INDEX, converter=float)
    led_pose: RigidTransform = attr.ib(default=IDENTITY)
    lens_pose: RigidTransform = attr.ib(default=IDENTITY)
    pd_pose: RigidTransform = attr.ib(default=IDENTITY)
    receiver_moves_lenses: bool = attr.ib(default=True)

    @property
    def n_tx(self) -> int:
        return self.leds.n_elements

    @property
    def n_rx(self) -> int:
        return self.pds.n_elements

    def led_center(self, index: int) -> np.ndarray:
        return element_center(self.leds, index, self.led_pose)

    def pd_center(self, index: int) -> np.ndarray:
        return element_center(self.pds, index, self.pd_pose)

    def led_normal(self) -> np.ndarray:
        """world emission axis of every LED (they all face the receiver)."""
        return self.led_pose.apply_direction(np.array([0.0, 0.0, -1.0]))

    def pd_array_center(self) -> np.ndarray:
        return self.pd_pose.apply(self.pds.nominal_center)

    def led_array_center(self) -> np.ndarray:
        return self.led_pose.apply(self.leds.nominal_center)

    def to_dict(self) -> Dict[str, Any]:
        """canonical plain-data form used for digests and config round-trips."""
        return {
            "leds": attr.asdict(self.leds),
            "pds": attr.asdict(self.pds),
            "lenses": [lens_to_dict(lens) for lens in self.lenses],
            "ambient_index": self.ambient_index,
            "receiver_moves_lenses": self.receiver_moves_lenses,
            "placement": {
                "leds": attr.asdict(self.led_pose),
                "lenses": attr.asdict(self.lens_pose),
                "pds": attr.asdict(self.pd_pose),
            },
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def lens_to_dict(lens: LensElement) -> Dict[str, Any]:
    return {
        "front_vertex_z": lens.front_vertex_z,
        "center_thickness": lens.center_thickness,
        "aperture_diameter": lens.aperture_diameter,
        "refractive_index": lens.refractive_index,
        "orientation": lens.front.orientation.value,
        "alpha_front": lens.front.alpha2,
        "alpha_back": lens.back.alpha2,
        "beta_front": lens.front.alpha4,
        "beta_back": lens.back.alpha4,
    }


def apply_pose(scene: Scene, target: Target, pose: Pose) -> Scene:
    """a new scene with the target array moved by `pose` about its center.

    Receiver poses carry both lenses along unless
    `scene.receiver_moves_lenses` is false.
    """
    target = Target(target)
    if pose.is_identity:
        return scene

    if target is Target.TRANSMITTER:
        placement = pose.about(scene.led_array_center())
        return attr.evolve(scene, led_pose=scene.led_pose.then(placement))

    placement = pose.about(scene.pd_array_center())
    moved = attr.evolve(scene, pd_pose=scene.pd_pose.then(placement))
    if scene.receiver_moves_lenses:
        moved = attr.evolve(moved, lens_pose=scene.lens_pose.then(placement))

    return moved


def default_lenses(
    refractive_index: float = LENS_INDEX,
    orientation: Orientation = Orientation.TOWARD_DETECTOR,
) -> Tuple[LensElement, LensElement]:
    """the optimized convex/concave pair."""
    convex = LensElement.build(
        front_vertex_z=CONVEX_FRONT_Z,
        center_thickness=CONVEX_THICKNESS,
        alpha_front=CONVEX_ALPHA_FRONT,
        alpha_back=CONVEX_ALPHA_BACK,
        beta_front=CONVEX_BETA_FRONT,
        beta_back=CONVEX_BETA_BACK,
        aperture_diameter=CONVEX_APERTURE,
        refractive_index=refractive_index,
        orientation=orientation,
    )
    concave = LensElement.build(
        front_vertex_z=CONCAVE_FRONT_Z,
        center_thickness=CONCAVE_THICKNESS,
        alpha_front=CONCAVE_ALPHA_FRONT,
        alpha_back=CONCAVE_ALPHA_BACK,
        aperture_diameter=CONCAVE_APERTURE,
        refractive_index=refractive_index,
        orientation=orientation,
    )
    return convex, concave


def default_scene(pd_grid_n: int = PD_GRID_N, with_lenses: bool = True) -> Scene:
    leds = LedArraySpec(
        grid_n=LED_GRID_N,
        element_size=LED_SIZE,
        gap=LED_GAP,
        plane_z=LED_PLANE_Z,
        lambertian_exponent=LAMBERTIAN_EXPONENT,
    )
    pds = PdArraySpec(grid_n=pd_grid_n, element_size=PD_SIZE, gap=PD_GAP, plane_z=PD_PLANE_Z)
    lenses = default_lenses() if with_lenses else ()

    return Scene(leds=leds, pds=pds, lenses=lenses)
