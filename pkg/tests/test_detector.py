import json

import numpy as np
import pytest

from mcdrift.contrastive import ThresholdState
from mcdrift.detector import DriftReport, HeatmapMatrix, detect_drift, heatmap_row, mcd
from mcdrift.encoder import Embedding, init_params
from mcdrift.errors import ContractError
from mcdrift.stream import StreamConfig, windows_from_array


def constant_window(value=1.0, window=40, slide=10, d=2):
    config = StreamConfig(window_size=window, slide_size=slide)
    stream = np.full((window, d), value)
    return list(windows_from_array(config, stream))[0]


def test_mcd_identity():
    h = np.array([1.0, -2.0, 3.0])
    assert mcd(h, h) == 0.0


def test_mcd_pythagorean():
    assert mcd(np.array([0.0, 3.0]), np.array([4.0, 0.0])) == pytest.approx(5.0)


def test_mcd_symmetry_and_embedding_unwrap():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = rng.normal(size=4), rng.normal(size=4)
        assert mcd(a, b) == mcd(b, a)
    assert mcd(Embedding(np.zeros(2)), Embedding(np.array([3.0, 4.0]))) == pytest.approx(5.0)


def test_mcd_pseudometric():
    rng = np.random.default_rng(1)
    for _ in range(50):
        a, b, c = rng.normal(size=5), rng.normal(size=5), rng.normal(size=5)
        assert mcd(a, b) >= 0
        assert mcd(a, c) <= mcd(a, b) + mcd(b, c) + 1e-9


def test_mcd_dimension_mismatch():
    with pytest.raises(ContractError):
        mcd(np.zeros(3), np.zeros(4))


def test_detect_drift_identical_subwindows():
    rng = np.random.default_rng(2)
    window = constant_window()
    params = init_params(2, 6, 4, 1.0, rng)
    report = detect_drift(window, params, ThresholdState(sigma=0.5, alpha=0.05), 5, rng)
    assert report.mcd_value == pytest.approx(0.0, abs=1e-12)
    assert report.drift is False
    assert report.window_end_time == window.window_end_time


def test_detect_drift_strict_inequality_at_sigma():
    # identical sub-windows give mcd exactly 0; sigma = 0 means 0 > 0 is False
    rng = np.random.default_rng(3)
    window = constant_window()
    params = init_params(2, 6, 4, 1.0, rng)
    report = detect_drift(window, params, ThresholdState(sigma=0.0, alpha=0.05), 5, rng)
    assert report.mcd_value == report.sigma == 0.0
    assert report.drift is False


def test_detect_drift_not_ready():
    rng = np.random.default_rng(4)
    window = constant_window()
    params = init_params(2, 6, 4, 1.0, rng)
    report = detect_drift(window, params, None, 5, rng)
    assert report.drift is False
    assert report.threshold_ready is False
    assert report.sigma is None
    record = json.loads(report.to_json())
    assert record["sigma"] is None and record["method"] == "mcd_dd"


def test_detect_drift_fires_on_separated_subwindows():
    config = StreamConfig(window_size=40, slide_size=10)
    stream = np.zeros((40, 2))
    stream[30:] = 50.0  # newest sub-window far from the rest
    window = list(windows_from_array(config, stream))[0]
    params = init_params(2, 6, 4, 1.0, np.random.default_rng(5))
    rng = np.random.default_rng(6)
    report = detect_drift(window, params, ThresholdState(sigma=1e-6, alpha=0.05), 5, rng)
    assert report.drift is True
    assert report.mcd_value > 1e-6


def test_detect_drift_mean_over_draws():
    rng = np.random.default_rng(7)
    window = constant_window()
    params = init_params(2, 6, 4, 1.0, rng)
    report = detect_drift(window, params, ThresholdState(sigma=0.5, alpha=0.05), 5, rng, draws=4)
    assert report.mcd_value == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ContractError):
        detect_drift(window, params, None, 5, rng, draws=0)


def test_drift_report_invariants():
    with pytest.raises(ContractError):
        DriftReport(window_end_time=10, mcd_value=2.0, sigma=1.0, drift=False)
    with pytest.raises(ContractError):
        DriftReport(window_end_time=10, mcd_value=0.5, sigma=1.0, drift=True)
    with pytest.raises(ContractError):
        DriftReport(window_end_time=10, mcd_value=0.5, sigma=None, drift=True,
                    threshold_ready=False)
    with pytest.raises(ContractError):
        DriftReport(window_end_time=10, mcd_value=-1.0, sigma=1.0, drift=False)


def test_heatmap_row_length_and_zeros():
    rng = np.random.default_rng(8)
    window = constant_window(window=60, slide=10)
    params = init_params(2, 6, 4, 1.0, rng)
    row = heatmap_row(window, params, 5, rng)
    assert row.shape == (window.config.n_sub - 1,)
    assert np.allclose(row, 0.0, atol=1e-12)


def test_heatmap_matrix_csv(tmp_path):
    values = np.array([[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]])
    matrix = HeatmapMatrix(values=values, window_end_times=np.array([100, 110]))
    path = tmp_path / "hm.csv"
    matrix.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "preceding_subwindow,100,110"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "1" and float(first[1]) == 0.1
    with pytest.raises(ContractError):
        HeatmapMatrix(values=-values, window_end_times=np.array([100, 110]))
