from vlcsim.optics.lens import LensElement
from vlcsim.optics.refraction import refract, refract_batch
from vlcsim.optics.surfaces import (
    AsphericSurface,
    Orientation,
    Ray,
    SurfaceHit,
    intersect,
    intersect_batch,
    sag,
    surface_normal,
    surface_normals,
)
