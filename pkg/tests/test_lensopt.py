import importlib

import attr
import numpy as np
import pytest

from vlcsim.constants import PENALTY
from vlcsim.errors import InfeasibleLensError
from vlcsim.lensopt import LensParams, OptimizerOptions, objective, optimize
from vlcsim.lensopt.optimize import initial_simplex
from vlcsim.metrics import condition_number
from vlcsim.optics import LensElement
from vlcsim.raytrace import estimate_channel

# the package re-exports the `optimize` function, which shadows the submodule attribute
lens_optimize = importlib.import_module("vlcsim.lensopt.optimize")

REFERENCE = [0.036, 0.007, -0.08, 0.05]


def _quadratic_around(target):
    target = np.asarray(target)

    def fake_objective(params, scene_template, budget, seed, n_workers=1, bound=0.2):
        return 1.0 + float(np.sum((params.as_array() - target) ** 2))

    return fake_objective


def _narrow_valley_around(target, half_width=1e-3):
    """flat everywhere except a thin slab in the first coefficient."""
    target = np.asarray(target)

    def fake_objective(params, scene_template, budget, seed, n_workers=1, bound=0.2):
        x = params.as_array()
        if abs(x[0] - target[0]) > half_width:
            return 1e3
        return 1.0 + 1e3 * float(np.sum((x - target) ** 2))

    return fake_objective


def test_params_from_the_reference_scene(reference_scene):
    params = LensParams.from_scene(reference_scene)
    np.testing.assert_allclose(params.as_array(), REFERENCE)
    assert LensParams.from_array(params.as_array()) == params
    assert params.within()
    assert not LensParams(0.3, 0.0, 0.0, 0.0).within()


def test_non_finite_params_are_rejected():
    with pytest.raises(InfeasibleLensError):
        LensParams(np.nan, 0.0, 0.0, 0.0)


def test_crossing_surfaces_cannot_be_applied(reference_scene):
    with pytest.raises(InfeasibleLensError):
        LensParams(0.2, -0.2, -0.08, 0.05).apply(reference_scene)

    moved = LensParams(0.03, 0.01, -0.07, 0.04).apply(reference_scene)
    np.testing.assert_allclose(LensParams.from_scene(moved).as_array(), [0.03, 0.01, -0.07, 0.04])


def test_needs_a_lens_pair(bare_scene):
    with pytest.raises(ValueError):
        LensParams.from_scene(bare_scene)


def test_objective_penalizes_unusable_geometry(reference_scene):
    assert objective(LensParams(0.25, 0.0, 0.0, 0.0), reference_scene, 100) == PENALTY
    assert objective(LensParams(0.2, -0.2, -0.08, 0.05), reference_scene, 100) == PENALTY


def test_objective_reuses_its_rays(small_scene):
    params = LensParams.from_scene(small_scene)
    first = objective(params, small_scene, 500, seed=1)
    again = objective(params, small_scene, 500, seed=1)

    assert first == again
    assert first >= 1.0


def test_initial_simplex():
    simplex = initial_simplex(np.array([0.04, -0.08, 0.0, 0.05]), 0.1)

    assert simplex.shape == (5, 4)
    np.testing.assert_allclose(simplex[0], [0.04, -0.08, 0.0, 0.05])
    np.testing.assert_allclose(np.diag(simplex[1:] - simplex[0]), [0.004, 0.008, 0.005, 0.005])


def test_optimizer_finds_the_minimum(monkeypatch, reference_scene):
    target = np.asarray(REFERENCE) + 0.01
    monkeypatch.setattr(lens_optimize, "objective", _quadratic_around(target))

    initial = LensParams.from_scene(reference_scene)
    result = optimize(
        reference_scene, initial, OptimizerOptions(max_evals=400, restarts=2, scan_span=0.0)
    )

    np.testing.assert_allclose(result.best_params.as_array(), target, atol=1e-3)
    assert result.best_kappa == pytest.approx(1.0, abs=1e-5)
    assert result.evaluation_count <= 400
    assert result.rounds >= 1


def test_coordinate_scan_finds_a_narrow_valley(monkeypatch, reference_scene):
    monkeypatch.setattr(lens_optimize, "objective", _narrow_valley_around(REFERENCE))
    # 20% short on every coefficient, well outside the valley
    initial = LensParams(*(0.8 * np.asarray(REFERENCE)))

    scanned = optimize(reference_scene, initial, OptimizerOptions(max_evals=400))
    assert scanned.best_kappa < 1.01
    np.testing.assert_allclose(scanned.best_params.as_array(), REFERENCE, atol=1e-3)

    # the simplex alone never leaves the plateau
    plain = optimize(reference_scene, initial, OptimizerOptions(max_evals=400, scan_span=0.0))
    assert plain.best_kappa == 1e3


def test_optimizer_respects_the_budget(monkeypatch, reference_scene):
    monkeypatch.setattr(lens_optimize, "objective", _quadratic_around(np.zeros(4)))

    initial = LensParams.from_scene(reference_scene)
    result = optimize(reference_scene, initial, OptimizerOptions(max_evals=10))

    assert result.evaluation_count == 10
    frame = result.trace_frame()
    assert list(frame.columns) == [
        "iteration",
        "alpha_convex_front",
        "alpha_convex_back",
        "alpha_concave_front",
        "alpha_concave_back",
        "kappa",
        "best_kappa",
    ]
    assert list(frame["iteration"]) == list(range(1, 11))
    assert np.all(np.diff(frame["best_kappa"]) <= 0)


def test_optimizer_rejects_an_infeasible_start(reference_scene):
    with pytest.raises(InfeasibleLensError):
        optimize(reference_scene, LensParams(0.2, -0.2, -0.08, 0.05))
    with pytest.raises(ValueError):
        OptimizerOptions(max_evals=0)
    with pytest.raises(ValueError):
        OptimizerOptions(scan_span=1.0)
    with pytest.raises(ValueError):
        OptimizerOptions(scan_steps=0)


def test_flat_lenses_do_not_separate_the_leds(reference_scene):
    lenses = [
        LensElement.build(
            lens.front_vertex_z, lens.center_thickness, 0.0, 0.0, lens.aperture_diameter
        )
        for lens in reference_scene.lenses
    ]
    flat = attr.evolve(reference_scene, lenses=lenses)
    channel, _ = estimate_channel(flat, 2000, seed=8, n_workers=1)
    assert condition_number(channel) > 30.0

    # the reference pair on the same rays
    focused, _ = estimate_channel(reference_scene, 2000, seed=8, n_workers=1)
    assert condition_number(focused) < 3.0


@pytest.mark.slow
@pytest.mark.parametrize("factors", [(0.8, 0.8, 0.8, 0.8), (1.2, 0.8, 1.2, 0.8)])
def test_optimizer_recovers_the_reference_from_a_perturbed_start(reference_scene, factors):
    options = OptimizerOptions(ray_budget=1000, max_evals=450, seed=2023, n_workers=1)
    reference_kappa = objective(
        LensParams.from_scene(reference_scene), reference_scene, 1000, seed=2023, n_workers=1
    )

    initial = LensParams(*(np.asarray(factors) * REFERENCE))
    result = optimize(reference_scene, initial, options)

    assert result.best_kappa <= 1.5 * reference_kappa
    assert result.evaluation_count <= 450
