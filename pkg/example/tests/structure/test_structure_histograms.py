import csv
import math

import numpy as np
import pytest

from coplanar.structure.histograms import (
    AzimuthDistanceHistogram,
    HeightHistogram,
    smoothing_kernel,
)


def test_smoothing_kernel():
    kernel = smoothing_kernel(1.0)
    assert len(kernel) == 7
    assert kernel[3] == 1.0
    assert kernel[2] == pytest.approx(math.exp(-0.5))
    np.testing.assert_allclose(kernel, kernel[::-1])
    assert len(smoothing_kernel(1.0, truncate=1.0)) == 3
    np.testing.assert_array_equal(smoothing_kernel(0.0), [1.0])


def test_height_bins():
    hist = HeightHistogram(0.05, 10.0)
    assert len(hist.weights) == 401
    assert hist.index(0.0) == 200
    assert hist.index(1.0) == 220
    assert hist.index(-0.024) == 200
    assert hist.centers[220] == pytest.approx(1.0)
    assert hist.index(10.2) is None
    assert not hist.add(-10.2)
    assert hist.heights == []
    with pytest.raises(ValueError):
        HeightHistogram(0.0)


def test_height_smoothing_keeps_isolated_weight():
    hist = HeightHistogram(0.05, 10.0)
    hist.add(1.0, 2.0)
    smoothed = hist.smoothed()
    assert smoothed[220] == pytest.approx(2.0)
    assert smoothed[221] == pytest.approx(2.0 * math.exp(-0.5))
    assert smoothed.sum() == pytest.approx(2.0 * smoothing_kernel(1.0).sum())


def test_height_peaks():
    hist = HeightHistogram(0.05, 10.0)
    for _ in range(25):
        hist.add(0.0)
        hist.add(2.5)
    for _ in range(10):
        hist.add(-1.0)
    assert hist.peaks(20.0) == [200, 250]
    assert hist.peaks(5.0) == [180, 200, 250]
    assert hist.peaks(30.0) == []


def test_height_refine():
    hist = HeightHistogram(0.05, 10.0)
    hist.add(1.01, 1.0, "a")
    hist.add(0.99, 3.0, "b")
    hist.add(1.5, 5.0, "c")
    assert hist.votes_near(220) == [0, 1]
    assert hist.refine(220) == pytest.approx(0.995)
    # no votes: bin centre
    assert hist.refine(100) == pytest.approx(-5.0)


def test_azimuth_bins():
    hist = AzimuthDistanceHistogram(3.0, 0.1, 20.0)
    assert hist.weights.shape == (120, 201)
    assert hist.index(0.0, 4.0) == (0, 40)
    assert hist.index(2.0 * math.pi - 0.001, 4.0) == (0, 40)
    assert hist.index(math.pi / 2, 3.0) == (30, 30)
    assert hist.index(0.0, -0.1) is None
    assert hist.index(0.0, 20.1) is None
    with pytest.raises(ValueError):
        AzimuthDistanceHistogram(7.0)


def test_azimuth_peak_wraps():
    hist = AzimuthDistanceHistogram(3.0, 0.1, 20.0)
    for _ in range(15):
        hist.add(0.01, 4.0)
        hist.add(2.0 * math.pi - 0.01, 4.0)
    assert hist.peaks(20.0) == [(0, 40)]
    assert len(hist.votes_near((0, 40))) == 30
    theta, distance = hist.refine((0, 40))
    assert theta == pytest.approx(0.0, abs=1e-12)
    assert distance == pytest.approx(4.0)

    # column 119 is a neighbour of column 0
    assert len(hist.votes_near((119, 40))) == 30


def test_azimuth_smoothing_wraps():
    hist = AzimuthDistanceHistogram(3.0, 0.1, 20.0)
    hist.add_column(0, 4.0, 2.0)
    smoothed = hist.smoothed()
    assert smoothed[0, 40] == pytest.approx(2.0)
    assert smoothed[119, 40] == pytest.approx(smoothed[1, 40])
    assert smoothed[119, 40] == pytest.approx(2.0 * math.exp(-0.5))


def test_dump_csv(tmp_path):
    hist = HeightHistogram(0.05, 10.0)
    hist.add(1.0, 3.0)
    hist.dump_csv(tmp_path / "height.csv")
    with (tmp_path / "height.csv").open() as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 7
    peak = [r for r in rows if r["bin"] == "220"][0]
    assert float(peak["center"]) == pytest.approx(1.0)
    assert float(peak["raw"]) == 3.0

    azimuth = AzimuthDistanceHistogram(3.0, 0.1, 20.0)
    azimuth.add(0.0, 4.0)
    azimuth.dump_csv(tmp_path / "azimuth.csv")
    with (tmp_path / "azimuth.csv").open() as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 49
    assert {"theta_bin", "d_bin", "theta_deg", "d", "raw", "smoothed"} == set(rows[0])


def test_azimuth_refine_ignores_column_votes():
    hist = AzimuthDistanceHistogram(3.0, 0.1, 20.0)
    for _ in range(10):
        hist.add(0.0, 4.0)
    hist.add_column(1, 4.1, 2.0)
    assert len(hist.votes_near((0, 40))) == 11
    theta, distance = hist.refine((0, 40))
    assert theta == pytest.approx(0.0, abs=1e-12)
    assert distance == pytest.approx(4.0)

    # a peak made of column votes only still refines
    hist = AzimuthDistanceHistogram(3.0, 0.1, 20.0)
    hist.add_column(1, 4.1, 2.0)
    theta, distance = hist.refine((1, 41))
    assert theta == pytest.approx(math.radians(3.0))
    assert distance == pytest.approx(4.1)
