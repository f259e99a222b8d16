"""Coordinate charts and batched point sets."""

from __future__ import annotations

import numpy as np

__all__ = ["Chart", "PointBatch", "ChartMismatch"]


class ChartMismatch(ValueError):
    """Two objects bound to different charts were combined."""


class Chart:
    """A named coordinate chart: an ordered list of distinct coordinate names.

    Charts are compared by identity; two charts with equal names are still
    different charts.
    """

    def __init__(self, name, coord_names):
        coord_names = list(coord_names)
        if len(set(coord_names)) != len(coord_names):
            raise ValueError("coordinate names must be pairwise distinct")
        if not coord_names:
            raise ValueError("chart must have positive dimension")
        self.name = name
        self.coord_names = coord_names
        self.dim = len(coord_names)
        self._index = {c: i for i, c in enumerate(coord_names)}

    def index(self, coord_name):
        try:
            return self._index[coord_name]
        except KeyError:
            raise KeyError(f"chart {self.name!r} has no coordinate {coord_name!r}") from None

    def point(self, values):
        return PointBatch(self, np.asarray(values, dtype=float)[None, :])

    def points(self, values):
        return PointBatch(self, np.asarray(values, dtype=float))

    def __repr__(self):
        return f"Chart({self.name!r}, dim={self.dim})"


class PointBatch:
    """A (N, dim) array of points of one chart."""

    def __init__(self, chart, values):
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != chart.dim:
            raise ValueError(
                f"expected shape (N, {chart.dim}), got {values.shape}"
            )
        self.chart = chart
        self.values = values

    @property
    def n(self):
        return self.values.shape[0]

    def row(self, i):
        return PointBatch(self.chart, self.values[i : i + 1])

    def coord(self, name):
        return self.values[:, self.chart.index(name)]

    def __repr__(self):
        return f"PointBatch({self.chart.name!r}, n={self.n})"


def same_chart(a, b):
    if a is not b:
        raise ChartMismatch(f"chart mismatch: {a!r} vs {b!r}")


Chart.check_same = staticmethod(same_chart)
