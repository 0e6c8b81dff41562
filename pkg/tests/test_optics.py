import numpy as np
import pytest

from vlcsim.errors import InfeasibleLensError, OutOfApertureError, TotalInternalReflection
from vlcsim.optics import (
    AsphericSurface,
    LensElement,
    Orientation,
    Ray,
    intersect,
    intersect_batch,
    refract,
    refract_batch,
    sag,
    surface_normal,
)
from vlcsim.scene import default_lenses


def test_sag_quadratic_and_quartic():
    surface = AsphericSurface(alpha2=0.036, aperture_radius=7.5)
    assert sag(surface, 5.0) == pytest.approx(0.9)
    assert sag(surface, 0.0) == 0.0

    quartic = AsphericSurface(alpha2=0.01, alpha4=1e-4, aperture_radius=7.5)
    assert sag(quartic, 2.0) == pytest.approx(0.04 + 1.6e-3)


def test_sag_outside_aperture():
    surface = AsphericSurface(alpha2=0.036, aperture_radius=7.5)
    with pytest.raises(OutOfApertureError):
        sag(surface, 7.6)
    with pytest.raises(OutOfApertureError):
        sag(surface, -1.0)


def test_axial_ray_hits_paraboloid_at_its_sag():
    surface = AsphericSurface(alpha2=0.05, aperture_radius=5.0)
    ray = Ray(origin=[3.0, 0.0, 10.0], direction=[0.0, 0.0, -1.0])

    hit = intersect(ray, surface)
    assert hit is not None
    assert hit.point[2] == pytest.approx(0.05 * 9.0, abs=1e-12)
    assert hit.t == pytest.approx(10.0 - 0.45, abs=1e-12)


def test_ray_outside_aperture_misses():
    surface = AsphericSurface(alpha2=0.05, aperture_radius=5.0)
    ray = Ray(origin=[6.0, 0.0, 10.0], direction=[0.0, 0.0, -1.0])
    assert intersect(ray, surface) is None


def test_ray_parallel_to_vertex_plane_is_rejected():
    surface = AsphericSurface(alpha2=0.05, aperture_radius=5.0)
    ray = Ray(origin=[0.0, 0.0, 10.0], direction=[1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        intersect(ray, surface)


@pytest.mark.parametrize("orientation", list(Orientation))
def test_closed_form_matches_newton(rng, orientation):
    surface = AsphericSurface(
        alpha2=-0.04, aperture_radius=7.5, vertex_z=20.0, orientation=orientation
    )
    n = 500
    origins = np.column_stack(
        [rng.uniform(-3, 3, n), rng.uniform(-3, 3, n), np.full(n, 100.0)]
    )
    directions = np.column_stack(
        [rng.uniform(-0.03, 0.03, n), rng.uniform(-0.03, 0.03, n), -np.ones(n)]
    )
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)

    t_closed, _, hit_closed = intersect_batch(surface, origins, directions)
    t_newton, _, hit_newton = intersect_batch(surface, origins, directions, method="newton")

    both = hit_closed & hit_newton
    assert both.sum() > 0.9 * n
    np.testing.assert_allclose(t_closed[both], t_newton[both], rtol=0, atol=1e-9)


def test_quartic_hit_lies_on_surface(rng):
    surface = AsphericSurface(
        alpha2=0.02,
        alpha4=-5e-5,
        aperture_radius=7.5,
        vertex_z=50.0,
        orientation=Orientation.TOWARD_DETECTOR,
    )
    n = 200
    origins = np.column_stack(
        [rng.uniform(-5, 5, n), rng.uniform(-5, 5, n), np.full(n, 80.0)]
    )
    directions = np.tile([0.0, 0.0, -1.0], (n, 1))

    _, points, hit = intersect_batch(surface, origins, directions)
    assert hit.all()

    r = np.hypot(points[:, 0], points[:, 1])
    np.testing.assert_allclose(points[:, 2], surface.height(r), atol=1e-9)


def test_normals_are_perpendicular_to_the_surface():
    surface = AsphericSurface(alpha2=0.03, aperture_radius=7.5)
    assert np.allclose(surface_normal(surface, [0.0, 0.0, 0.0]), [0.0, 0.0, 1.0])

    x = 2.0
    point = np.array([x, 0.0, surface.height(x)])
    tangent = np.array([1.0, 0.0, 2.0 * 0.03 * x])
    normal = surface_normal(surface, point)

    assert np.dot(normal, tangent) == pytest.approx(0.0, abs=1e-12)
    assert np.linalg.norm(normal) == pytest.approx(1.0)
    assert normal[2] > 0


def test_snell_invariant(rng):
    n = 10_000
    incident = np.column_stack(
        [rng.uniform(-0.5, 0.5, n), rng.uniform(-0.5, 0.5, n), -np.ones(n)]
    )
    incident /= np.linalg.norm(incident, axis=1, keepdims=True)
    normals = np.column_stack(
        [rng.uniform(-0.3, 0.3, n), rng.uniform(-0.3, 0.3, n), np.ones(n)]
    )
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)

    n1, n2 = 1.0, 1.5168
    transmitted, ok = refract_batch(incident, normals, n1, n2)
    assert ok.all()

    sin_i = np.linalg.norm(np.cross(incident, normals), axis=1)
    sin_t = np.linalg.norm(np.cross(transmitted, normals), axis=1)
    assert np.max(np.abs(n1 * sin_i - n2 * sin_t)) < 1e-10

    # coplanar with the incident ray and the normal
    coplanar = np.einsum("ij,ij->i", np.cross(incident, normals), transmitted)
    assert np.max(np.abs(coplanar)) < 1e-10


def test_normal_incidence_passes_straight():
    out = refract([0.0, 0.0, -1.0], [0.0, 0.0, 1.0], 1.0, 1.5168)
    np.testing.assert_allclose(out, [0.0, 0.0, -1.0], atol=1e-15)


def test_oblique_refraction_angle():
    theta = np.radians(45.0)
    out = refract([np.sin(theta), 0.0, -np.cos(theta)], [0.0, 0.0, 1.0], 1.0, 1.5)
    assert np.degrees(np.arcsin(abs(out[0]))) == pytest.approx(28.126, abs=1e-3)
    assert np.linalg.norm(out) == pytest.approx(1.0)


def test_concave_sag_is_negative():
    surface = AsphericSurface(alpha2=-0.08, aperture_radius=5.0)
    assert sag(surface, 2.0) == pytest.approx(-0.32)


def test_total_internal_reflection():
    theta = np.radians(60.0)
    incident = [np.sin(theta), 0.0, -np.cos(theta)]
    with pytest.raises(TotalInternalReflection):
        refract(incident, [0.0, 0.0, 1.0], 1.5168, 1.0)

    _, ok = refract_batch(np.array([incident]), np.array([[0.0, 0.0, 1.0]]), 1.5168, 1.0)
    assert not ok[0]


def test_refract_rejects_normal_facing_away():
    with pytest.raises(ValueError):
        refract([0.0, 0.0, -1.0], [0.0, 0.0, -1.0], 1.0, 1.5)


def test_reference_lenses_are_feasible():
    convex, concave = default_lenses()

    assert convex.back_vertex_z == pytest.approx(53.125)
    assert concave.back_vertex_z == pytest.approx(30.625)
    # 20.5 mm of air between the two vertices
    assert convex.back_vertex_z - concave.front_vertex_z == pytest.approx(20.5)
    assert convex.is_feasible() and concave.is_feasible()
    assert convex.validate() is convex


def test_crossing_surfaces_are_infeasible():
    lens = LensElement.build(56.875, 6.875, 0.2, -0.2, 15.0)
    assert not lens.is_feasible()
    with pytest.raises(InfeasibleLensError):
        lens.validate()


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(center_thickness=0.0),
        dict(center_thickness=-1.0),
        dict(refractive_index=1.0),
    ],
)
def test_invalid_lens_construction(kwargs):
    args = dict(
        front_vertex_z=30.0,
        center_thickness=2.0,
        alpha_front=-0.08,
        alpha_back=0.05,
        aperture_diameter=10.0,
    )
    args.update(kwargs)
    with pytest.raises(InfeasibleLensError):
        LensElement.build(**args)


def test_lens_interfaces_switch_media():
    lens = LensElement.build(30.0, 2.0, -0.08, 0.05, 10.0, refractive_index=1.5)
    (front, a0, a1), (back, b0, b1) = lens.interfaces(1.0)
    assert front is lens.front and back is lens.back
    assert (a0, a1, b0, b1) == (1.0, 1.5, 1.5, 1.0)
