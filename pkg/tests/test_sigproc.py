import numpy as np
import pytest
from scipy import stats

from vlcsim.constants import PUBLISHED_NO_PROCESSING_CAPACITY, PUBLISHED_SIC_TAIL_CAPACITY
from vlcsim.errors import CalibrationError, EmptySubsetError
from vlcsim.sigproc import (
    Accounting,
    CapacityReport,
    ProcessingMode,
    WeightVector,
    build_plan,
    calibrate_noise_variance,
    capacity,
    evaluate,
    mrc_weights,
    select_receivers,
    sic_sinr,
    simulate_symbols,
)

ALL_MODES = list(ProcessingMode)


def _random_channel(rng, n_rx=6, n_tx=4):
    return rng.uniform(0.01, 1.0, (n_rx, n_tx)) + np.eye(n_rx, n_tx)


def test_mode_parsing():
    assert ProcessingMode.parse("all") == ALL_MODES
    assert ProcessingMode.parse("sic_only, combine_only") == [
        ProcessingMode.SIC_ONLY,
        ProcessingMode.COMBINE_ONLY,
    ]
    with pytest.raises(ValueError):
        ProcessingMode.parse("zero_forcing")


def test_select_receivers_ties_and_zeros():
    H = np.array([[1.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 0.0]])
    assert select_receivers(H, 0, k=2) == [1, 2]
    assert select_receivers(H, 1, k=3) == [2]
    with pytest.raises(EmptySubsetError):
        select_receivers(np.zeros((4, 2)), 0, k=2)
    with pytest.raises(ValueError):
        select_receivers(H, 0, k=5)


def test_mrc_weights_unit_response(rng):
    H = _random_channel(rng)
    for j in range(H.shape[1]):
        subset = select_receivers(H, j, k=4)
        wv = mrc_weights(H, j, subset)

        assert abs(wv.combine(H[:, j]) - 1.0) < 1e-12
        assert set(np.flatnonzero(wv.w)) == set(subset)


def test_weight_vector_support_must_match_subset():
    with pytest.raises(ValueError):
        WeightVector(w=[0.5, 0.0, 0.5], target=0, subset=(0, 1))


def test_decode_order_by_combined_power():
    H = np.diag([1.0, 3.0, 2.0]) + 0.01
    plan = build_plan(H, ProcessingMode.SIC_ONLY)
    assert plan.decode_order == (1, 2, 0)

    # equal powers keep index order
    assert build_plan(np.eye(3), ProcessingMode.SIC_ONLY).decode_order == (0, 1, 2)


def _sinr_by_hand(H, plan, noise_variance, self_inclusive):
    out = np.empty(plan.n_tx)
    for p, j in enumerate(plan.decode_order):
        w = plan.weights[j].w
        signal = float(w @ H[:, j]) ** 2
        if plan.mode.cancels:
            others = plan.decode_order[p + 1:]
        else:
            others = [i for i in range(plan.n_tx) if i != j]
        interference = sum(float(w @ H[:, i]) ** 2 for i in others)
        if self_inclusive and not plan.mode.cancels:
            interference += signal
        out[j] = signal / (interference + noise_variance * float(w @ w))
    return out


@pytest.mark.parametrize("mode", ALL_MODES)
@pytest.mark.parametrize("accounting", list(Accounting))
def test_sinr_matches_direct_sums(rng, mode, accounting):
    H = _random_channel(rng)
    plan = build_plan(H, mode)
    sinr = sic_sinr(H, plan, 0.05, accounting)

    expected = _sinr_by_hand(H, plan, 0.05, accounting is Accounting.SELF_INCLUSIVE)
    np.testing.assert_allclose(sinr, expected, rtol=1e-12)


def test_cancellation_never_hurts(rng):
    for _ in range(100):
        H = _random_channel(rng)
        reports = {m: evaluate(H, 0.1, m) for m in ALL_MODES}

        assert np.all(
            reports[ProcessingMode.COMBINE_AND_SIC].sinr
            >= reports[ProcessingMode.COMBINE_ONLY].sinr - 1e-12
        )
        assert np.all(
            reports[ProcessingMode.SIC_ONLY].sinr
            >= reports[ProcessingMode.NO_PROCESSING].sinr - 1e-12
        )


def test_capacity_report_consistency():
    sinr = np.array([0.0, 1.0, 3.0])
    np.testing.assert_allclose(capacity(sinr), [0.0, 1.0, 2.0])

    with pytest.raises(ValueError):
        CapacityReport(
            sinr=sinr,
            capacity=np.ones(3),
            noise_variance=1.0,
            mode=ProcessingMode.SIC_ONLY,
        )
    with pytest.raises(ValueError):
        capacity([-0.1])


def test_noise_variance_must_be_positive(published_H):
    for var in (0.0, -1e-12):
        with pytest.raises(ValueError):
            evaluate(published_H, var, ProcessingMode.NO_PROCESSING)


def test_unreachable_transmitter_gets_zero_sinr():
    H = np.eye(4) + 0.05
    H[:, 2] = 0.0
    for mode in ALL_MODES:
        report = evaluate(H, 0.01, mode, k=2)
        assert report.sinr[2] == 0.0
        assert report.capacity[2] == 0.0
        assert report.decode_order[-1] == 2
        assert np.all(np.delete(report.sinr, 2) > 0)


def test_standard_calibration_hits_the_uncancelled_target(published_H):
    var = calibrate_noise_variance(published_H, PUBLISHED_NO_PROCESSING_CAPACITY)
    report = evaluate(published_H, var, ProcessingMode.NO_PROCESSING)

    assert var > 0
    assert np.mean(report.capacity) == pytest.approx(PUBLISHED_NO_PROCESSING_CAPACITY, abs=1e-6)


def test_self_inclusive_calibration_on_the_cancelled_tail(published_H):
    accounting = Accounting.SELF_INCLUSIVE
    var = calibrate_noise_variance(
        published_H,
        PUBLISHED_SIC_TAIL_CAPACITY,
        mode=ProcessingMode.COMBINE_AND_SIC,
        channel="last",
        accounting=accounting,
    )
    reports = {m: evaluate(published_H, var, m, accounting=accounting) for m in ALL_MODES}

    tail = reports[ProcessingMode.COMBINE_AND_SIC]
    assert tail.last_decoded_capacity == pytest.approx(PUBLISHED_SIC_TAIL_CAPACITY, abs=1e-6)

    plain = reports[ProcessingMode.NO_PROCESSING].capacity
    assert np.all(plain < 1.0)
    assert np.mean(plain) == pytest.approx(PUBLISHED_NO_PROCESSING_CAPACITY, abs=0.02)
    assert np.mean(tail.capacity) > np.mean(plain)


def test_unreachable_calibration_target(published_H):
    with pytest.raises(CalibrationError):
        calibrate_noise_variance(
            published_H, 1.5, accounting=Accounting.SELF_INCLUSIVE
        )
    with pytest.raises(ValueError):
        calibrate_noise_variance(published_H, 1.0, channel="median")


def test_noiseless_symbols_decode_perfectly():
    H = np.eye(4) + 0.05 * (1.0 - np.eye(4))
    for mode in ALL_MODES:
        plan = build_plan(H, mode)
        report = simulate_symbols(H, plan, 0.0, 20_000, seed=5)
        np.testing.assert_array_equal(report.ber, 0.0)


def test_single_link_ber_is_gaussian_tail():
    H = np.ones((1, 1))
    plan = build_plan(H, ProcessingMode.NO_PROCESSING)
    report = simulate_symbols(H, plan, 0.25, 200_000, seed=9, chunk=30_000)

    # levels 0 and 2, threshold 1, noise sd 0.5
    assert report.ber[0] == pytest.approx(stats.norm.sf(2.0), abs=0.002)
    assert report.realized_sinr[0] == pytest.approx(4.0, rel=0.02)


def test_decision_errors_propagate_through_cancellation():
    H = np.array([[1.0, 0.0], [0.5, 1.0]])
    plan = build_plan(H, ProcessingMode.SIC_ONLY)
    assert plan.decode_order == (0, 1)

    decided = simulate_symbols(H, plan, 0.25, 200_000, seed=4)
    ideal = simulate_symbols(H, plan, 0.25, 200_000, seed=4, force_correct=True)

    assert decided.ber[1] > decided.ber[0]
    assert ideal.ber[1] < decided.ber[1]
    assert ideal.ber[1] == pytest.approx(stats.norm.sf(2.0), abs=0.002)


def test_realized_sinr_tracks_the_model(rng):
    for trial in range(10):
        n = 3 + trial % 2
        H = rng.uniform(0.05, 0.4, (n, n)) + np.eye(n)
        for mode in ALL_MODES:
            plan = build_plan(H, mode, k=2)
            model = sic_sinr(H, plan, 0.2)
            report = simulate_symbols(H, plan, 0.2, 100_000, seed=trial, force_correct=True)
            np.testing.assert_allclose(report.realized_sinr, model, rtol=0.03)


def test_symbol_arguments_are_checked():
    H = np.eye(2)
    plan = build_plan(H, ProcessingMode.NO_PROCESSING)
    with pytest.raises(ValueError):
        simulate_symbols(H, plan, 0.1, 0, seed=1)
    with pytest.raises(ValueError):
        simulate_symbols(H, plan, -0.1, 10, seed=1)


@pytest.mark.slow
def test_sinr_model_against_a_long_symbol_run(rng):
    for trial in range(20):
        n = 3 + trial % 2
        H = rng.uniform(0.05, 0.4, (n, n)) + np.eye(n)
        for mode in ALL_MODES:
            plan = build_plan(H, mode, k=2)
            model = sic_sinr(H, plan, 0.2)
            report = simulate_symbols(
                H, plan, 0.2, 1_000_000, seed=100 + trial, force_correct=True
            )
            np.testing.assert_allclose(report.realized_sinr, model, rtol=0.02)
