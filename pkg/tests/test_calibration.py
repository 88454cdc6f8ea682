import statistics

import pytest

from helpers import chunk_means, splitmix64_reference
from oodmon.calibration import (
    CalibrationResult,
    build_histogram,
    check_separation,
    find_min_tau,
    windowed_means,
    write_histogram_csv,
)
from oodmon.errors import EmptyInputError, NoFullWindowError
from oodmon.monitor import Monitor, ScoreRecord


def uniform_stream(n, seed, lo=0.0, hi=1.0):
    state = seed
    values = []
    for _ in range(n):
        state, z = splitmix64_reference(state)
        values.append(lo + (hi - lo) * ((z >> 11) / 2.0**53))
    return values


def gaussian_stream(n, seed, mu, sd):
    import math

    state = seed
    values = []
    for _ in range(n):
        state, z1 = splitmix64_reference(state)
        state, z2 = splitmix64_reference(state)
        u1 = (z1 >> 11) / 2.0**53
        u2 = (z2 >> 11) / 2.0**53
        values.append(mu + sd * math.sqrt(-2.0 * math.log(1.0 - u1)) * math.cos(2.0 * math.pi * u2))
    return values


# -- windowed means ------------------------------------------------------------


def test_windowed_means_basic():
    assert windowed_means([10.0, 20.0, 30.0, 40.0], 2) == [15.0, 35.0]


def test_windowed_means_tau_one_is_identity():
    scores = uniform_stream(17, seed=1)
    assert windowed_means(scores, 1) == scores


def test_windowed_means_drops_trailing_partial():
    assert windowed_means([1.0, 2.0, 3.0], 2) == [1.5]


def test_windowed_means_errors():
    with pytest.raises(EmptyInputError):
        windowed_means([], 1)
    with pytest.raises(NoFullWindowError):
        windowed_means([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        windowed_means([1.0], 0)


def test_windowed_means_bitwise_equal_to_monitor():
    scores = uniform_stream(100, seed=2, lo=10.0, hi=30.0)
    for tau in (1, 3, 7, 50):
        mon = Monitor(tau=tau)
        streamed = []
        for i, value in enumerate(scores):
            verdict = mon.push(ScoreRecord(frame_id=i, psnr=value))
            if verdict is not None:
                streamed.append(verdict.mean_psnr)
        assert streamed == windowed_means(scores, tau)


# -- histogram --------------------------------------------------------------------


def test_histogram_final_bin_closed():
    hist = build_histogram([0.0, 1.0], bins=2, lo=0.0, hi=1.0)
    assert hist.counts == [1, 1]


def test_histogram_equal_scores_single_bin():
    hist = build_histogram([5.0] * 9, bins=4, lo=4.0, hi=6.0)
    assert sum(hist.counts) == 9
    assert max(hist.counts) == 9


def test_histogram_conserves_count():
    scores = uniform_stream(500, seed=3, lo=-2.0, hi=3.0)
    hist = build_histogram(scores, bins=50, lo=0.0, hi=1.0)  # many out of range
    assert sum(hist.counts) == 500


def test_histogram_clamps_outliers_to_end_bins():
    hist = build_histogram([-10.0, 0.25, 10.0], bins=2, lo=0.0, hi=1.0)
    assert hist.counts == [2, 1]  # -10 clamps into the first bin, 10 into the last


def test_histogram_default_range_floor_ceil():
    hist = build_histogram([13.2, 21.7], bins=10)
    assert hist.lo == 13.0 and hist.hi == 22.0


def test_histogram_errors():
    with pytest.raises(ValueError):
        build_histogram([1.0], bins=0, lo=0.0, hi=1.0)
    with pytest.raises(EmptyInputError):
        build_histogram([], bins=2, lo=0.0, hi=1.0)
    with pytest.raises(ValueError):
        build_histogram([1.0], bins=2, lo=1.0, hi=1.0)


def test_histogram_csv_format(tmp_path):
    hist = build_histogram([0.25, 0.75], bins=2, lo=0.0, hi=1.0, label="in")
    path = tmp_path / "h.csv"
    write_histogram_csv(hist, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "bin_lo,bin_hi,count,label"
    assert lines[1] == "0.0,0.5,1,in"
    assert lines[2] == "0.5,1.0,1,in"


# -- separation ---------------------------------------------------------------------


def test_separation_positive_margin():
    separated, margin = check_separation([18.0, 19.0, 22.0], [13.0, 17.0])
    assert separated and margin == 1.0


def test_separation_overlap():
    separated, margin = check_separation([18.0, 19.0], [13.0, 18.5])
    assert not separated and margin == -0.5


def test_separation_zero_margin_is_overlap():
    separated, margin = check_separation([20.0], [20.0])
    assert not separated and margin == 0.0


def test_separation_empty_input():
    with pytest.raises(EmptyInputError):
        check_separation([], [1.0])


# -- find_min_tau ------------------------------------------------------------------


def test_constant_streams_separate_immediately():
    result = find_min_tau([20.0] * 8, [16.0] * 8, tau_max=10)
    assert result.tau_min == 1
    assert result.threshold == 18.0
    assert result.margin == 4.0


def test_alternating_streams_need_tau_two():
    in_scores = [17.0, 21.0] * 32
    out_scores = [19.0, 15.0] * 32
    result = find_min_tau(in_scores, out_scores, tau_max=10)
    assert result.tau_min == 2
    assert result.threshold == 18.0
    curve = dict(result.margin_curve)
    assert curve[1] == -2.0  # raw scores overlap: 17 < 19
    assert curve[2] == 2.0  # window means: in all 19, out all 17


def test_identical_streams_never_separate():
    result = find_min_tau([20.0] * 30, [20.0] * 30, tau_max=10)
    assert result.tau_min is None and result.threshold is None and result.margin is None
    assert all(margin <= 0.0 for _, margin in result.margin_curve)
    assert len(result.margin_curve) == 10


def test_find_min_tau_matches_brute_force_scan():
    in_scores = gaussian_stream(120, seed=31, mu=20.0, sd=1.0)
    out_scores = gaussian_stream(150, seed=32, mu=17.0, sd=1.5)
    tau_max = 60
    result = find_min_tau(in_scores, out_scores, tau_max)
    expected_curve = []
    expected_tau_min = None
    for tau in range(1, tau_max + 1):
        if tau > len(in_scores) or tau > len(out_scores):
            break
        wi = chunk_means(in_scores, tau)
        wo = chunk_means(out_scores, tau)
        margin = min(wi) - max(wo)
        expected_curve.append((tau, margin))
        if margin > 0 and expected_tau_min is None:
            expected_tau_min = tau
    assert result.margin_curve == expected_curve
    assert result.tau_min == expected_tau_min
    if result.tau_min is not None:
        wi = chunk_means(in_scores, result.tau_min)
        wo = chunk_means(out_scores, result.tau_min)
        assert max(wo) < result.threshold < min(wi)


def test_scan_stops_when_full_windows_run_out():
    result = find_min_tau([20.0] * 5, [10.0] * 12, tau_max=50)
    assert result.tau_min == 1
    assert len(result.margin_curve) == 5  # tau 6..50 has no full in-domain window


def test_raw_separation_implies_every_tau():
    in_scores = gaussian_stream(90, seed=33, mu=25.0, sd=0.5)
    out_scores = gaussian_stream(90, seed=34, mu=15.0, sd=0.5)
    result = find_min_tau(in_scores, out_scores, tau_max=45)
    assert result.tau_min == 1
    assert all(margin > 0.0 for _, margin in result.margin_curve)


def test_windowing_narrows_variance():
    scores = gaussian_stream(2600, seed=35, mu=20.0, sd=1.0)
    var_raw = statistics.variance(windowed_means(scores, 1))
    var_windowed = statistics.variance(windowed_means(scores, 50))
    assert var_windowed < var_raw


def test_find_min_tau_input_validation():
    with pytest.raises(EmptyInputError):
        find_min_tau([], [1.0], tau_max=5)
    with pytest.raises(ValueError):
        find_min_tau([1.0], [1.0], tau_max=0)


def test_calibration_result_dict_round_trip():
    result = find_min_tau([20.0] * 8, [16.0] * 8, tau_max=4)
    doc = result.to_dict()
    assert doc["separated"] is True
    assert doc["windowing"]
    back = CalibrationResult.from_dict(doc)
    assert back.tau_min == result.tau_min
    assert back.threshold == result.threshold
    assert back.margin_curve == result.margin_curve
