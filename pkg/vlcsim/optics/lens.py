"""Thick lens elements made of two aspheric surfaces."""
from typing import List, Tuple

import attr
import numpy as np

from vlcsim.constants import AMBIENT_INDEX, LENS_INDEX
from vlcsim.errors import InfeasibleLensError
from vlcsim.optics.surfaces import AsphericSurface, Orientation

# radial samples used when checking that the glass never thins to zero
FEASIBILITY_SAMPLES = 129


@attr.s(frozen=True, slots=True)
class LensElement:
    """a singlet; `front` faces the source, `back` faces the detector."""

    front: AsphericSurface = attr.ib()
    back: AsphericSurface = attr.ib()
    center_thickness: float = attr.ib(converter=float)
    refractive_index: float = attr.ib(default=LENS_INDEX, converter=float)
    aperture_diameter: float = attr.ib(default=None)

    def __attrs_post_init__(self):
        if self.aperture_diameter is None:
            object.__setattr__(
                self, "aperture_diameter", 2.0 * self.front.aperture_radius
            )

    @center_thickness.validator
    def _check_thickness(self, attribute, value):
        if not value > 0:
            raise InfeasibleLensError(f"center thickness must be > 0, got {value}")

    @refractive_index.validator
    def _check_index(self, attribute, value):
        if not value > 1:
            raise InfeasibleLensError(f"refractive index must be > 1, got {value}")

    @back.validator
    def _check_vertices(self, attribute, value):
        gap = self.front.vertex_z - value.vertex_z
        if abs(gap - self.center_thickness) > 1e-9:
            raise InfeasibleLensError(
                f"vertex separation {gap} mm disagrees with center thickness "
                f"{self.center_thickness} mm"
            )

    @classmethod
    def build(
        cls,
        front_vertex_z: float,
        center_thickness: float,
        alpha_front: float,
        alpha_back: float,
        aperture_diameter: float,
        refractive_index: float = LENS_INDEX,
        orientation: Orientation = Orientation.TOWARD_DETECTOR,
        beta_front: float = 0.0,
        beta_back: float = 0.0,
    ) -> "LensElement":
        radius = aperture_diameter / 2.0
        front = AsphericSurface(
            alpha2=alpha_front,
            alpha4=beta_front,
            vertex_z=front_vertex_z,
            aperture_radius=radius,
            orientation=orientation,
        )
        back = AsphericSurface(
            alpha2=alpha_back,
            alpha4=beta_back,
            vertex_z=front_vertex_z - center_thickness,
            aperture_radius=radius,
            orientation=orientation,
        )
        return cls(front, back, center_thickness, refractive_index, aperture_diameter)

    @property
    def aperture_radius(self) -> float:
        return self.aperture_diameter / 2.0

    @property
    def front_vertex_z(self) -> float:
        return self.front.vertex_z

    @property
    def back_vertex_z(self) -> float:
        return self.back.vertex_z

    def with_alphas(self, alpha_front: float, alpha_back: float) -> "LensElement":
        return attr.evolve(
            self,
            front=attr.evolve(self.front, alpha2=alpha_front),
            back=attr.evolve(self.back, alpha2=alpha_back),
        )

    def glass_thickness(self, r: np.ndarray) -> np.ndarray:
        """axial glass thickness at radial distance r."""
        return self.front.height(r) - self.back.height(r)

    def min_glass_thickness(self) -> float:
        r = np.sqrt(np.linspace(0.0, self.aperture_radius**2, FEASIBILITY_SAMPLES))
        return float(np.min(self.glass_thickness(r)))

    def is_feasible(self) -> bool:
        return self.min_glass_thickness() > 0.0

    def validate(self) -> "LensElement":
        thinnest = self.min_glass_thickness()
        if not thinnest > 0.0:
            raise InfeasibleLensError(
                f"surfaces cross inside the aperture (min glass thickness "
                f"{thinnest:.4f} mm)"
            )
        return self

    def interfaces(
        self, ambient_index: float = AMBIENT_INDEX
    ) -> List[Tuple[AsphericSurface, float, float]]:
        """(surface, index before, index after) in propagation order."""
        return [
            (self.front, ambient_index, self.refractive_index),
            (self.back, self.refractive_index, ambient_index),
        ]
