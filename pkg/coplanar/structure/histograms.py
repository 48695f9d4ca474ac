"""
Voting histograms used by plane detection. Bins are centred on integer
multiples of the bin size, and every vote is kept so that peaks can be
refined from the votes that produced them.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Any

import numpy as np
import scipy.ndimage

from coplanar.core.typing import Matrix, Vector


def smoothing_kernel(sigma: float, truncate: float = 3.0) -> Vector:
    """
    Gaussian kernel in bin units, scaled to 1 at its centre so an isolated
    bin keeps its weight after smoothing.
    """
    if sigma <= 0.0:
        return np.ones(1)
    radius = int(math.floor(truncate * sigma + 0.5))
    x = np.arange(-radius, radius + 1, dtype=float)
    return np.exp(-0.5 * (x / sigma) ** 2)


def _label_peaks(
    smoothed: np.ndarray, raw: np.ndarray, mask: np.ndarray
) -> list[tuple[int, ...]]:
    """
    One index per connected plateau of local maxima: the cell with the
    highest smoothed then raw weight, first in index order on ties.
    """
    labels, count = scipy.ndimage.label(mask)
    peaks = []
    for label in range(1, count + 1):
        cells = [tuple(int(v) for v in i) for i in np.argwhere(labels == label)]
        best = max(cells, key=lambda c: (smoothed[c], raw[c], [-v for v in c]))
        peaks.append(best)
    return sorted(peaks)


class HeightHistogram:
    """
    1D histogram of heights along the up direction.
    """

    def __init__(
        self,
        bin_size: float = 0.05,
        extent: float = 10.0,
        sigma: float = 1.0,
        truncate: float = 3.0,
    ) -> None:
        if bin_size <= 0.0:
            raise ValueError("Histogram bin size must be positive.")
        self.bin_size = bin_size
        self.extent = extent
        self.sigma = sigma
        self.truncate = truncate
        self.half = int(math.floor(extent / bin_size + 1e-9))
        self.weights = np.zeros(2 * self.half + 1)
        self.heights: list[float] = []
        self.vote_weights: list[float] = []
        self.sources: list[Any] = []

    @property
    def centers(self) -> Vector:
        return (np.arange(len(self.weights)) - self.half) * self.bin_size

    def index(self, height: float) -> int | None:
        i = int(round(height / self.bin_size)) + self.half
        if 0 <= i < len(self.weights):
            return i
        return None

    def add(self, height: float, weight: float = 1.0, source: Any = None) -> bool:
        """
        Vote for a height; returns False for heights outside the extent.
        """
        i = self.index(height)
        if i is None:
            return False
        self.weights[i] += weight
        self.heights.append(float(height))
        self.vote_weights.append(float(weight))
        self.sources.append(source)
        return True

    def smoothed(self) -> Vector:
        kernel = smoothing_kernel(self.sigma, self.truncate)
        return scipy.ndimage.convolve1d(self.weights, kernel, mode="constant")

    def peaks(self, threshold: float) -> list[int]:
        s = self.smoothed()
        local = scipy.ndimage.maximum_filter1d(s, size=3, mode="constant")
        mask = (s >= threshold) & (s >= local)
        return [p[0] for p in _label_peaks(s, self.weights, mask)]

    def votes_near(self, index: int, radius: int = 1) -> list[int]:
        """
        Indices of the votes falling within ``radius`` bins of ``index``.
        """
        out = []
        for k, h in enumerate(self.heights):
            i = self.index(h)
            if i is not None and abs(i - index) <= radius:
                out.append(k)
        return out

    def refine(self, index: int, radius: int = 1) -> float:
        """
        Weighted mean height of the votes around a peak bin.
        """
        votes = self.votes_near(index, radius)
        if not votes:
            return float(self.centers[index])
        h = np.array([self.heights[k] for k in votes])
        w = np.array([self.vote_weights[k] for k in votes])
        return float(np.dot(w, h) / w.sum())

    def dump_csv(self, path: str | Path) -> None:
        smoothed = self.smoothed()
        with Path(path).open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["bin", "center", "raw", "smoothed"])
            for i, (c, raw, sm) in enumerate(zip(self.centers, self.weights, smoothed)):
                if raw or sm:
                    writer.writerow([i, f"{c:.4f}", f"{raw:.6g}", f"{sm:.6g}"])


class AzimuthDistanceHistogram:
    """
    2D histogram over the azimuth of a horizontal normal, in ``[0, 2 pi)``,
    and the non-negative distance of the plane along it. The azimuth axis
    wraps around.
    """

    def __init__(
        self,
        azimuth_bin_deg: float = 3.0,
        distance_bin: float = 0.1,
        extent: float = 20.0,
        sigma: float = 1.0,
        truncate: float = 3.0,
    ) -> None:
        n_theta = 360.0 / azimuth_bin_deg
        if abs(n_theta - round(n_theta)) > 1e-9:
            raise ValueError("Azimuth bin size must divide 360 degrees.")
        if distance_bin <= 0.0:
            raise ValueError("Histogram bin size must be positive.")
        self.azimuth_bin = math.radians(azimuth_bin_deg)
        self.distance_bin = distance_bin
        self.extent = extent
        self.sigma = sigma
        self.truncate = truncate
        self.n_theta = int(round(n_theta))
        self.n_d = int(math.floor(extent / distance_bin + 1e-9)) + 1
        self.weights = np.zeros((self.n_theta, self.n_d))
        self.votes: list[tuple[float, float, float]] = []
        self.sources: list[Any] = []
        self.spread: list[bool] = []

    @property
    def thetas(self) -> Vector:
        return np.arange(self.n_theta) * self.azimuth_bin

    @property
    def distances(self) -> Vector:
        return np.arange(self.n_d) * self.distance_bin

    def index(self, theta: float, distance: float) -> tuple[int, int] | None:
        i = int(round(theta / self.azimuth_bin)) % self.n_theta
        j = int(round(distance / self.distance_bin))
        if distance < 0.0 or j >= self.n_d:
            return None
        return i, j

    def add(
        self,
        theta: float,
        distance: float,
        weight: float = 1.0,
        source: Any = None,
        spread: bool = False,
    ) -> bool:
        cell = self.index(theta, distance)
        if cell is None:
            return False
        self.weights[cell] += weight
        self.votes.append((theta % (2.0 * math.pi), float(distance), float(weight)))
        self.sources.append(source)
        self.spread.append(spread)
        return True

    def add_column(
        self, i: int, distance: float, weight: float = 1.0, source: Any = None
    ) -> bool:
        """
        Vote in azimuth column ``i`` exactly, at the given distance. Column
        votes carry no azimuth of their own and are left out of
        :meth:`refine` when a peak has other votes.
        """
        return self.add(i * self.azimuth_bin, distance, weight, source, spread=True)

    def smoothed(self) -> Matrix:
        kernel = smoothing_kernel(self.sigma, self.truncate)
        out = scipy.ndimage.convolve1d(self.weights, kernel, axis=0, mode="wrap")
        return scipy.ndimage.convolve1d(out, kernel, axis=1, mode="constant")

    def peaks(self, threshold: float) -> list[tuple[int, int]]:
        s = self.smoothed()
        # Wrap the azimuth axis by padding with the opposite columns.
        padded = np.concatenate([s[-1:], s, s[:1]], axis=0)
        local = scipy.ndimage.maximum_filter(padded, size=3, mode="constant")[1:-1]
        mask = (s >= threshold) & (s >= local)
        return _label_peaks(s, self.weights, mask)

    def votes_near(self, cell: tuple[int, int], radius: int = 1) -> list[int]:
        out = []
        for k, (theta, distance, _) in enumerate(self.votes):
            index = self.index(theta, distance)
            if index is None:
                continue
            di = (index[0] - cell[0] + self.n_theta // 2) % self.n_theta
            di -= self.n_theta // 2
            if abs(di) <= radius and abs(index[1] - cell[1]) <= radius:
                out.append(k)
        return out

    def refine(self, cell: tuple[int, int], radius: int = 1) -> tuple[float, float]:
        """
        Weighted mean azimuth and distance of the votes around a peak cell.
        Azimuths are averaged as offsets from the cell centre.
        """
        votes = self.votes_near(cell, radius)
        votes = [k for k in votes if not self.spread[k]] or votes
        theta0 = cell[0] * self.azimuth_bin
        if not votes:
            return theta0, cell[1] * self.distance_bin
        w = np.array([self.votes[k][2] for k in votes])
        offsets = np.array(
            [
                math.remainder(self.votes[k][0] - theta0, 2.0 * math.pi)
                for k in votes
            ]
        )
        d = np.array([self.votes[k][1] for k in votes])
        theta = (theta0 + float(np.dot(w, offsets) / w.sum())) % (2.0 * math.pi)
        return theta, float(np.dot(w, d) / w.sum())

    def dump_csv(self, path: str | Path) -> None:
        smoothed = self.smoothed()
        with Path(path).open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["theta_bin", "d_bin", "theta_deg", "d", "raw", "smoothed"])
            for i, j in zip(*np.nonzero((self.weights > 0) | (smoothed > 0))):
                writer.writerow(
                    [
                        i,
                        j,
                        f"{math.degrees(i * self.azimuth_bin):.2f}",
                        f"{j * self.distance_bin:.3f}",
                        f"{self.weights[i, j]:.6g}",
                        f"{smoothed[i, j]:.6g}",
                    ]
                )
